//! Ambient warped-product structure `M = P x_rho R` and the leaf-intrinsic and
//! cylinder-extrinsic quantities consumed by the PDE and the barriers.
//!
//! Two leaf charts are supported: rotationally symmetric leaves
//! `dr^2 + xi(r)^2 dtheta^2` (points are `(r, theta)`) and the flat cartesian
//! plane (points are `(x, y)`). On a rotational leaf the warping function
//! depends on `r`; on the flat leaf it depends on `x`. Vectors are always
//! returned as components in the orthonormal frame `(e_r, e_theta)` or
//! `(e_x, e_y)`.
//!
//! Curvatures of `Gamma` and of its equidistants follow the inward-normal
//! convention.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::field::SmoothField;
use crate::functions::ScalarFn;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point ({0}, {1}) lies outside the closed domain")]
    OutsideDomain(f64, f64),
    #[error("offset {epsilon} is not below the inradius {inradius}")]
    OffsetTooLarge { epsilon: f64, inradius: f64 },
    #[error("point ({0}, {1}) is not on the boundary")]
    NotOnBoundary(f64, f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Point of the leaf chart: `(r, theta)` on rotational leaves, `(x, y)` on the
/// flat leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafPoint {
    pub a: f64,
    pub b: f64,
}

impl LeafPoint {
    pub const fn new(a: f64, b: f64) -> Self {
        LeafPoint { a, b }
    }
}

/// Metric of the leaf `P`.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafMetric {
    /// `dr^2 + xi(r)^2 dtheta^2` with `dtheta^2` the round metric on `S^{n-1}`.
    RotSym { xi: ScalarFn, dim: usize },
    /// Flat `R^2`.
    CartesianFlat,
}

impl LeafMetric {
    pub fn euclidean_polar(dim: usize) -> Result<Self> {
        Self::rotsym(ScalarFn::Identity, dim)
    }

    /// Checks the smooth-pole conditions `xi(0) = 0`, `xi'(0) = 1`; positivity
    /// of `xi` is checked per domain by [`AmbientModel::check_domain`].
    pub fn rotsym(xi: ScalarFn, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(GeometryError::InvalidModel(format!("leaf dimension {dim} < 2")));
        }
        if xi.value(0.0).abs() > 1e-14 || (xi.d1(0.0) - 1.0).abs() > 1e-14 {
            return Err(GeometryError::InvalidModel(format!("xi = {xi} has no smooth pole")));
        }
        Ok(LeafMetric::RotSym { xi, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            LeafMetric::RotSym { dim, .. } => *dim,
            LeafMetric::CartesianFlat => 2,
        }
    }

    pub fn xi(&self) -> Option<&ScalarFn> {
        match self {
            LeafMetric::RotSym { xi, .. } => Some(xi),
            LeafMetric::CartesianFlat => None,
        }
    }

    pub fn is_rotsym(&self) -> bool {
        matches!(self, LeafMetric::RotSym { .. })
    }
}

/// `rho = |Y|`, with `f = rho^{-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingFunction {
    rho: ScalarFn,
}

impl WarpingFunction {
    pub fn new(rho: ScalarFn) -> Self {
        WarpingFunction { rho }
    }

    pub fn unit() -> Self {
        WarpingFunction { rho: ScalarFn::Constant(1.0) }
    }

    pub fn function(&self) -> &ScalarFn {
        &self.rho
    }

    pub fn rho(&self, t: f64) -> f64 {
        self.rho.value(t)
    }

    pub fn rho_d1(&self, t: f64) -> f64 {
        self.rho.d1(t)
    }

    pub fn rho_d2(&self, t: f64) -> f64 {
        self.rho.d2(t)
    }

    pub fn f(&self, t: f64) -> f64 {
        let rho = self.rho.value(t);
        1.0 / (rho * rho)
    }

    pub fn is_constant(&self) -> bool {
        self.rho.is_constant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    pub leaf: LeafMetric,
    pub warp: WarpingFunction,
}

impl AmbientModel {
    pub fn new(leaf: LeafMetric, warp: WarpingFunction) -> Self {
        AmbientModel { leaf, warp }
    }

    pub fn dim(&self) -> usize {
        self.leaf.dim()
    }

    pub fn rho(&self, p: LeafPoint) -> f64 {
        self.warp.rho(p.a)
    }

    pub fn f(&self, p: LeafPoint) -> f64 {
        self.warp.f(p.a)
    }

    /// `xi(r)`; identically 1 on the flat leaf (no angular scaling).
    pub fn xi(&self, r: f64) -> f64 {
        self.leaf.xi().map_or(1.0, |xi| xi.value(r))
    }

    pub fn xi_d1(&self, r: f64) -> f64 {
        self.leaf.xi().map_or(0.0, |xi| xi.d1(r))
    }

    pub fn xi_d2(&self, r: f64) -> f64 {
        self.leaf.xi().map_or(0.0, |xi| xi.d2(r))
    }

    /// Radial volume density `xi^{n-1}` of a rotational leaf (1 on the flat leaf).
    pub fn volume_density(&self, r: f64) -> f64 {
        match &self.leaf {
            LeafMetric::RotSym { xi, dim } => xi.value(r).powi(*dim as i32 - 1),
            LeafMetric::CartesianFlat => 1.0,
        }
    }

    /// Drift field `X = f nabla_{d_s} d_s = -grad ln rho`, tangent to the leaf.
    pub fn drift_field(&self, p: LeafPoint) -> [f64; 2] {
        [-self.warp.rho_d1(p.a) / self.warp.rho(p.a), 0.0]
    }

    /// Checks `rho > 0` on the closure of `domain` and chart compatibility.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        match (&self.leaf, &domain.shape) {
            (LeafMetric::RotSym { .. }, Shape::Rectangle { .. }) => {
                return Err(GeometryError::InvalidDomain("rectangles need a cartesian leaf".into()))
            }
            (LeafMetric::CartesianFlat, Shape::Disc { .. } | Shape::Annulus { .. }) => {
                return Err(GeometryError::InvalidDomain("discs and annuli need a rotational leaf".into()))
            }
            _ => {}
        }
        let (lo, hi) = domain.shape.first_coordinate_range();
        let samples = || (0..=256).map(|k| lo + (hi - lo) * k as f64 / 256.0);
        if let Some(t) = samples().find(|&t| self.warp.rho(t) <= 0.0) {
            return Err(GeometryError::InvalidModel(format!("rho({t}) <= 0")));
        }
        if let Some(xi) = self.leaf.xi() {
            if let Some(t) = samples().find(|&t| t > 0.0 && xi.value(t) <= 0.0) {
                return Err(GeometryError::InvalidModel(format!("xi({t}) <= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disc { r0: f64 },
    Annulus { r_in: f64, r_out: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Shape {
    pub fn disc(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(GeometryError::InvalidDomain(format!("disc radius {r0}")));
        }
        Ok(Shape::Disc { r0 })
    }

    pub fn annulus(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
            return Err(GeometryError::InvalidDomain(format!("annulus ({r_in}, {r_out})")));
        }
        Ok(Shape::Annulus { r_in, r_out })
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1 && x1.is_finite() && y1.is_finite() && x0.is_finite() && y0.is_finite()) {
            return Err(GeometryError::InvalidDomain("empty rectangle".into()));
        }
        Ok(Shape::Rectangle { x0, x1, y0, y1 })
    }

    pub fn inradius(&self) -> f64 {
        match *self {
            Shape::Disc { r0 } => r0,
            Shape::Annulus { r_in, r_out } => 0.5 * (r_out - r_in),
            Shape::Rectangle { x0, x1, y0, y1 } => 0.5 * (x1 - x0).min(y1 - y0),
        }
    }

    /// Euclidean-chart diameter; for rotational leaves this is the geodesic
    /// diameter bound `2 r_out` through the pole.
    pub fn diameter(&self) -> f64 {
        match *self {
            Shape::Disc { r0 } => 2.0 * r0,
            Shape::Annulus { r_out, .. } => 2.0 * r_out,
            Shape::Rectangle { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
        }
    }

    /// Radius of a normal geodesic disc containing the domain.
    pub fn enclosing_radius(&self) -> f64 {
        match *self {
            Shape::Disc { r0 } => r0,
            Shape::Annulus { r_out, .. } => r_out,
            Shape::Rectangle { .. } => 0.5 * self.diameter(),
        }
    }

    fn first_coordinate_range(&self) -> (f64, f64) {
        match *self {
            Shape::Disc { r0 } => (0.0, r0),
            Shape::Annulus { r_in, r_out } => (r_in, r_out),
            Shape::Rectangle { x0, x1, .. } => (x0, x1),
        }
    }

    /// Distance to `Gamma` measured in the leaf.
    pub fn distance_to_boundary(&self, p: LeafPoint) -> Result<f64> {
        const SLACK: f64 = 1e-12;
        let d = match *self {
            Shape::Disc { r0 } => r0 - p.a,
            Shape::Annulus { r_in, r_out } => (p.a - r_in).min(r_out - p.a),
            Shape::Rectangle { x0, x1, y0, y1 } => (p.a - x0).min(x1 - p.a).min(p.b - y0).min(y1 - p.b),
        };
        if d < -SLACK || (matches!(self, Shape::Disc { .. }) && p.a < -SLACK) {
            return Err(GeometryError::OutsideDomain(p.a, p.b));
        }
        Ok(d.max(0.0))
    }

    /// Nearest point of `Gamma` together with the inward unit normal there.
    pub fn nearest_boundary_point(&self, p: LeafPoint) -> (LeafPoint, [f64; 2]) {
        match *self {
            Shape::Disc { r0 } => (LeafPoint::new(r0, p.b), [-1.0, 0.0]),
            Shape::Annulus { r_in, r_out } => {
                if p.a - r_in <= r_out - p.a {
                    (LeafPoint::new(r_in, p.b), [1.0, 0.0])
                } else {
                    (LeafPoint::new(r_out, p.b), [-1.0, 0.0])
                }
            }
            Shape::Rectangle { x0, x1, y0, y1 } => {
                let cands = [
                    (p.a - x0, LeafPoint::new(x0, p.b), [1.0, 0.0]),
                    (x1 - p.a, LeafPoint::new(x1, p.b), [-1.0, 0.0]),
                    (p.b - y0, LeafPoint::new(p.a, y0), [0.0, 1.0]),
                    (y1 - p.b, LeafPoint::new(p.a, y1), [0.0, -1.0]),
                ];
                let best = cands.iter().fold(cands[0], |b, c| if c.0 < b.0 { *c } else { b });
                (best.1, best.2)
            }
        }
    }

    /// Unit gradient of the distance function (the inward normal of the
    /// equidistant through `p`), away from the cut locus.
    pub fn distance_gradient(&self, p: LeafPoint) -> [f64; 2] {
        self.nearest_boundary_point(p).1
    }

    /// `count` sample points per boundary component with inward normals.
    pub fn boundary_samples(&self, count: usize) -> Vec<(LeafPoint, [f64; 2])> {
        let count = count.max(1);
        let angles = (0..count).map(move |k| 2.0 * PI * k as f64 / count as f64);
        match *self {
            Shape::Disc { r0 } => angles.map(|t| (LeafPoint::new(r0, t), [-1.0, 0.0])).collect(),
            Shape::Annulus { r_in, r_out } => angles
                .flat_map(|t| [(LeafPoint::new(r_in, t), [1.0, 0.0]), (LeafPoint::new(r_out, t), [-1.0, 0.0])])
                .collect(),
            Shape::Rectangle { x0, x1, y0, y1 } => {
                // edge midpoints-of-subintervals, corners excluded
                let mut out = Vec::with_capacity(4 * count);
                for k in 0..count {
                    let s = (k as f64 + 0.5) / count as f64;
                    let x = x0 + s * (x1 - x0);
                    let y = y0 + s * (y1 - y0);
                    out.push((LeafPoint::new(x0, y), [1.0, 0.0]));
                    out.push((LeafPoint::new(x1, y), [-1.0, 0.0]));
                    out.push((LeafPoint::new(x, y0), [0.0, 1.0]));
                    out.push((LeafPoint::new(x, y1), [0.0, -1.0]));
                }
                out
            }
        }
    }
}

/// Bounded domain `Omega` in the leaf together with Dirichlet data on `Gamma`.
#[derive(Clone)]
pub struct Domain {
    pub shape: Shape,
    pub boundary_data: Arc<dyn SmoothField>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain").field("shape", &self.shape).finish_non_exhaustive()
    }
}

impl Domain {
    pub fn new(shape: Shape, boundary_data: Arc<dyn SmoothField>) -> Self {
        Domain { shape, boundary_data }
    }

    /// Domain with `phi = 0`.
    pub fn homogeneous(shape: Shape) -> Self {
        Domain { shape, boundary_data: Arc::new(|_: LeafPoint| 0.0) }
    }

    pub fn phi(&self, p: LeafPoint) -> f64 {
        self.boundary_data.value(p)
    }

    /// Boundary data extended to the interior as constant along normal geodesics.
    pub fn phi_extended(&self, p: LeafPoint) -> f64 {
        self.boundary_data.value(self.shape.nearest_boundary_point(p).0)
    }

    pub fn distance_to_boundary(&self, p: LeafPoint) -> Result<f64> {
        self.shape.distance_to_boundary(p)
    }

    /// `(inf, sup)` of the boundary data over a dense boundary sample.
    pub fn phi_bounds(&self) -> (f64, f64) {
        self.shape
            .boundary_samples(512)
            .iter()
            .map(|(p, _)| self.phi(*p))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Free function form of [`AmbientModel::drift_field`].
pub fn drift_field(model: &AmbientModel, p: LeafPoint) -> [f64; 2] {
    model.drift_field(p)
}

pub fn distance_to_boundary(domain: &Domain, p: LeafPoint) -> Result<f64> {
    domain.distance_to_boundary(p)
}

fn boundary_component(shape: &Shape, p: LeafPoint) -> Result<[f64; 2]> {
    let d = shape.distance_to_boundary(p)?;
    if d > 1e-9 {
        return Err(GeometryError::NotOnBoundary(p.a, p.b));
    }
    Ok(shape.nearest_boundary_point(p).1)
}

fn offset_point(shape: &Shape, p: LeafPoint, eta: [f64; 2], epsilon: f64) -> Result<LeafPoint> {
    let inradius = shape.inradius();
    if !(0.0..inradius).contains(&epsilon) {
        return Err(GeometryError::OffsetTooLarge { epsilon, inradius });
    }
    Ok(match shape {
        Shape::Rectangle { .. } => LeafPoint::new(p.a + epsilon * eta[0], p.b + epsilon * eta[1]),
        _ => LeafPoint::new(p.a + epsilon * eta[0], p.b),
    })
}

/// Geodesic curvature `kappa_eps = <X, eta_eps>` of the flow line through the
/// point at distance `epsilon` inward from the boundary point `p`.
pub fn flow_line_curvature(model: &AmbientModel, domain: &Domain, p: LeafPoint, epsilon: f64) -> Result<f64> {
    let eta = boundary_component(&domain.shape, p)?;
    let q = offset_point(&domain.shape, p, eta, epsilon)?;
    let x = model.drift_field(q);
    Ok(x[0] * eta[0] + x[1] * eta[1])
}

/// Inward mean curvature `h_eps` of the equidistant `Gamma_eps` in the leaf,
/// at the point at distance `epsilon` from the boundary point `p`.
pub fn equidistant_mean_curvature(model: &AmbientModel, domain: &Domain, p: LeafPoint, epsilon: f64) -> Result<f64> {
    let eta = boundary_component(&domain.shape, p)?;
    let q = offset_point(&domain.shape, p, eta, epsilon)?;
    Ok(match domain.shape {
        // circles of radius r have inward curvature xi'/xi; the inner circle of
        // an annulus has its inward normal pointing away from the pole
        Shape::Disc { .. } | Shape::Annulus { .. } => -eta[0] * model.xi_d1(q.a) / model.xi(q.a),
        Shape::Rectangle { .. } => 0.0,
    })
}

/// `H_cyl(eps) = ((n - 1) h_eps + kappa_eps) / n` at the foot point `p`.
pub fn cylinder_mean_curvature_at(model: &AmbientModel, domain: &Domain, p: LeafPoint, epsilon: f64) -> Result<f64> {
    let n = model.dim() as f64;
    let h = equidistant_mean_curvature(model, domain, p, epsilon)?;
    let kappa = flow_line_curvature(model, domain, p, epsilon)?;
    Ok(((n - 1.0) * h + kappa) / n)
}

/// Infimum of `H_cyl(eps)` over the equidistant `Gamma_eps` (sampled; exact
/// for rotational domains, where it is constant on each component).
pub fn cylinder_mean_curvature(model: &AmbientModel, domain: &Domain, epsilon: f64) -> Result<f64> {
    domain
        .shape
        .boundary_samples(64)
        .into_iter()
        .map(|(p, _)| cylinder_mean_curvature_at(model, domain, p, epsilon))
        .try_fold(f64::INFINITY, |acc, h| h.map(|h| acc.min(h)))
}

/// Principal Ricci curvatures of `M` at a leaf point: the two horizontal
/// eigenvalues (`e_r`/`e_x` and the tangential directions) and the vertical one.
pub fn ricci_eigenvalues(model: &AmbientModel, p: LeafPoint) -> [f64; 3] {
    let t = p.a;
    let (rho, rho1, rho2) = (model.warp.rho(t), model.warp.rho_d1(t), model.warp.rho_d2(t));
    match &model.leaf {
        LeafMetric::RotSym { xi, dim } => {
            let n = *dim as f64;
            let (x0, x1, x2) = (xi.value(t), xi.d1(t), xi.d2(t));
            let radial = -(n - 1.0) * x2 / x0 - rho2 / rho;
            let tangential = -x2 / x0 + (n - 2.0) * (1.0 - x1 * x1) / (x0 * x0) - rho1 * x1 / (rho * x0);
            let vertical = -(rho2 + (n - 1.0) * rho1 * x1 / x0) / rho;
            [radial, tangential, vertical]
        }
        LeafMetric::CartesianFlat => [-rho2 / rho, 0.0, -rho2 / rho],
    }
}

/// Lower bound for `Ric_M` over the domain: the warped-product Ricci tensor is
/// diagonal in `(horizontal eigenframe, d_s)`, so the minimum over unit
/// directions at each point is the smallest eigenvalue. Sampled on a 64 x 64
/// grid of cell centres.
pub fn ricci_lower_bound(model: &AmbientModel, domain: &Domain) -> f64 {
    const SAMPLES: usize = 64;
    let mid = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * (k as f64 + 0.5) / SAMPLES as f64;
    let points: Vec<LeafPoint> = match domain.shape {
        Shape::Disc { r0 } => (0..SAMPLES)
            .flat_map(|i| (0..SAMPLES).map(move |j| LeafPoint::new(mid(0.0, r0, i), mid(0.0, 2.0 * PI, j))))
            .collect(),
        Shape::Annulus { r_in, r_out } => (0..SAMPLES)
            .flat_map(|i| (0..SAMPLES).map(move |j| LeafPoint::new(mid(r_in, r_out, i), mid(0.0, 2.0 * PI, j))))
            .collect(),
        Shape::Rectangle { x0, x1, y0, y1 } => (0..SAMPLES)
            .flat_map(|i| (0..SAMPLES).map(move |j| LeafPoint::new(mid(x0, x1, i), mid(y0, y1, j))))
            .collect(),
    };
    points
        .into_iter()
        .flat_map(|p| ricci_eigenvalues(model, p))
        .fold(f64::INFINITY, f64::min)
}

/// Area of the unit sphere `S^{k}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2 pi, |S^{k}| = 2 pi / (k - 1) |S^{k-2}|
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}
