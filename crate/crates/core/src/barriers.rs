//! Barriers for the Dirichlet problem and hypothesis checks for the
//! existence theorems.
//!
//! * height barriers `sup phi + h(d)` and `inf phi - h(d)` with
//!   `h = (e^{CA}/C)(1 - e^{-Cd})`;
//! * geodesic-sphere comparison radius;
//! * boundary-gradient barriers `phi +- mu ln(1 + K d)` on a strip `d <= eps`.
//!
//! The constants `C` and `K` are found by doubling until the discrete
//! super/subsolution tests hold on the given grid.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::field::SmoothField;
use crate::geometry::{
    cylinder_mean_curvature, cylinder_mean_curvature_at, flow_line_curvature, ricci_lower_bound, AmbientModel,
    Domain, GeometryError, LeafPoint, Shape,
};
use crate::grid::{Grid, ScalarField};
use crate::mce::{MceError, Operator};
use crate::rotational::{serrin_bound_f, RotationalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] MceError),
    #[error(transparent)]
    Rotational(#[from] RotationalError),
    #[error("invalid barrier parameters: {0}")]
    InvalidParams(String),
    #[error("hypotheses of theorem {} fail", .0.theorem)]
    Hypotheses(Box<HypothesisReport>),
    #[error("no {what} found up to {limit}")]
    ConstructionFailed { what: &'static str, limit: f64 },
    #[error("sphere barrier needs k > 0, got {0}")]
    NonPositiveCurvature(f64),
}

/// Barrier constants. `mu = C / ln(1 + K)` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub c: f64,
    pub a: f64,
    pub k: f64,
    pub epsilon: f64,
}

impl BarrierParams {
    pub fn new(domain: &Domain, c: f64, a: f64, k: f64, epsilon: f64) -> Result<Self, BarrierError> {
        let diam = domain.shape.diameter();
        if !(c > 0.0 && c.is_finite()) {
            return Err(BarrierError::InvalidParams(format!("C = {c} must be positive")));
        }
        if !(a > diam) {
            return Err(BarrierError::InvalidParams(format!("A = {a} must exceed diam = {diam}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(BarrierError::InvalidParams(format!("K = {k} must be positive")));
        }
        let inradius = domain.shape.inradius();
        if !(epsilon > 0.0 && epsilon < inradius) {
            return Err(BarrierError::InvalidParams(format!("strip width {epsilon} outside (0, {inradius})")));
        }
        Ok(BarrierParams { c, a, k, epsilon })
    }

    /// Strip width `min(inradius / 4, diam / 10)`.
    pub fn default_strip(shape: &Shape) -> f64 {
        (shape.inradius() / 4.0).min(0.1 * shape.diameter())
    }

    pub fn mu(&self) -> f64 {
        self.c / self.k.ln_1p()
    }

    /// `h(d) = (e^{CA}/C)(1 - e^{-Cd})`.
    pub fn height(&self, d: f64) -> f64 {
        (self.c * self.a).exp() / self.c * (-(-self.c * d).exp_m1())
    }

    /// `h'(d) = e^{C(A - d)}`.
    pub fn height_d1(&self, d: f64) -> f64 {
        (self.c * (self.a - d)).exp()
    }

    /// `h''(d) = -C h'(d)`.
    pub fn height_d2(&self, d: f64) -> f64 {
        -self.c * self.height_d1(d)
    }

    /// `psi(d) = mu ln(1 + K d)`.
    pub fn psi(&self, d: f64) -> f64 {
        self.mu() * (self.k * d).ln_1p()
    }

    /// `psi'(0) = C K / ln(1 + K)`.
    pub fn psi_d1_at_zero(&self) -> f64 {
        self.mu() * self.k
    }
}

/// `sup phi + h(d(p))`.
pub fn upper_height_barrier(domain: &Domain, sup_phi: f64, params: &BarrierParams, p: LeafPoint) -> Result<f64, BarrierError> {
    Ok(sup_phi + params.height(domain.distance_to_boundary(p)?))
}

/// `inf phi - h(d(p))`.
pub fn lower_height_barrier(domain: &Domain, inf_phi: f64, params: &BarrierParams, p: LeafPoint) -> Result<f64, BarrierError> {
    Ok(inf_phi - params.height(domain.distance_to_boundary(p)?))
}

fn sampled_h(grid: &Grid, h: &dyn SmoothField) -> Vec<f64> {
    grid.sample(h)
}

/// Extremes of the discrete residual of both height barriers over interior
/// nodes: `(max Q[upper], min Q[lower])`. The barriers are a super- and a
/// subsolution when the first is negative and the second positive.
pub fn height_barrier_residuals(
    model: &AmbientModel,
    domain: &Domain,
    h: &dyn SmoothField,
    grid: Arc<Grid>,
    params: &BarrierParams,
) -> Result<(f64, f64), BarrierError> {
    let op = Operator::new(model, grid.clone())?;
    let hv = sampled_h(&grid, h);
    let (inf_phi, sup_phi) = domain.phi_bounds();
    let d: Vec<f64> = grid.points().map(|p| domain.distance_to_boundary(p)).collect::<Result<_, _>>()?;
    let upper: Vec<f64> = d.iter().map(|&d| sup_phi + params.height(d)).collect();
    let lower: Vec<f64> = d.iter().map(|&d| inf_phi - params.height(d)).collect();
    let interior = grid.interior_nodes();
    let max_upper = interior.iter().map(|&k| op.residual_at(&upper, &hv, k)).fold(f64::NEG_INFINITY, f64::max);
    let min_lower = interior.iter().map(|&k| op.residual_at(&lower, &hv, k)).fold(f64::INFINITY, f64::min);
    Ok((max_upper, min_lower))
}

/// Smallest `C` in `{1, 2, 4, ..., 2^20}` for which both height barriers pass
/// the discrete test on `grid` and `C + inf kappa_eps > 0`; `A = 1.1 diam`.
/// The Theorem 1 hypotheses are checked first.
pub fn choose_barrier_constants(
    model: &AmbientModel,
    domain: &Domain,
    h: &dyn SmoothField,
    grid: Arc<Grid>,
) -> Result<BarrierParams, BarrierError> {
    let report = check_theorem_hypotheses(model, domain, h, Theorem::One)?;
    if !report.verdict {
        return Err(BarrierError::Hypotheses(Box::new(report)));
    }
    let shape = domain.shape;
    let a = 1.1 * shape.diameter();
    let epsilon = BarrierParams::default_strip(&shape);
    let min_kappa = min_flow_line_curvature(model, domain)?;
    let mut c = 1.0;
    while c <= (1u64 << 20) as f64 {
        let params = BarrierParams::new(domain, c, a, 1.0, epsilon)?;
        if c + min_kappa > 0.0 && params.height_d1(0.0).is_finite() {
            let (up, low) = height_barrier_residuals(model, domain, h, grid.clone(), &params)?;
            if up < 0.0 && low > 0.0 {
                return Ok(params);
            }
        }
        c *= 2.0;
    }
    Err(BarrierError::ConstructionFailed { what: "height-barrier constant C", limit: (1u64 << 20) as f64 })
}

/// `inf kappa_eps` over boundary samples and 20 offsets in `[0, 0.95 inradius]`.
pub fn min_flow_line_curvature(model: &AmbientModel, domain: &Domain) -> Result<f64, BarrierError> {
    let inradius = domain.shape.inradius();
    let mut m = f64::INFINITY;
    for (p, _) in domain.shape.boundary_samples(32) {
        for k in 0..20 {
            let eps = 0.95 * inradius * k as f64 / 19.0;
            m = m.min(flow_line_curvature(model, domain, p, eps)?);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightCheck {
    pub contained: bool,
    /// Smallest slack `min(upper - u, u - lower)` over nodes.
    pub margin: f64,
}

/// Whether `inf phi - h(d) - 1e-8 <= u <= sup phi + h(d) + 1e-8` at every node.
pub fn verify_height(
    u: &ScalarField,
    domain: &Domain,
    sup_phi: f64,
    inf_phi: f64,
    params: &BarrierParams,
) -> Result<HeightCheck, BarrierError> {
    let mut margin = f64::INFINITY;
    for (k, p) in u.grid().points().enumerate() {
        let hd = params.height(domain.distance_to_boundary(p)?);
        let v = u.values()[k];
        margin = margin.min((sup_phi + hd - v).min(v - (inf_phi - hd)));
    }
    Ok(HeightCheck { contained: margin >= -1e-8, margin })
}

/// Largest `r0` for which geodesic spheres in a space with `Ric >= -(n-1)k`
/// still bound `sup |H|`: `arcoth(sup_H / sqrt k) / sqrt k`, or infinity when
/// `sup_H <= sqrt k`.
pub fn sphere_barrier_radius(k: f64, sup_h: f64) -> Result<f64, BarrierError> {
    if !(k > 0.0) {
        return Err(BarrierError::NonPositiveCurvature(k));
    }
    let sk = k.sqrt();
    let x = sup_h.abs() / sk;
    if x <= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * ((x + 1.0) / (x - 1.0)).ln() / sk)
}

/// Outcome of the boundary-gradient search on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBarrierSide {
    /// `H_cyl + H >= 0` (upper) or `H_cyl - H >= 0` (lower) on the boundary.
    pub precondition: bool,
    /// Smallest accepted `K`, if any.
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBarrierReport {
    pub upper: GradientBarrierSide,
    pub lower: GradientBarrierSide,
    /// `psi'(0)` for the larger accepted `K`, when both sides succeed.
    pub psi_d1_at_zero: Option<f64>,
    /// `sup_Gamma |grad u|` by one-sided differences.
    pub sup_boundary_gradient: f64,
    /// `sup_Gamma |grad phi|` (tangential derivative of the data).
    pub sup_data_gradient: f64,
}

impl GradientBarrierReport {
    /// `sup |grad u| <= psi'(0) + sup |grad phi| + 1e-6`.
    pub fn bound_holds(&self) -> Option<bool> {
        self.psi_d1_at_zero.map(|p| self.sup_boundary_gradient <= p + self.sup_data_gradient + 1e-6)
    }
}

/// Tangential gradient of the boundary data, by central differences along `Gamma`.
pub fn boundary_data_gradient(model: &AmbientModel, domain: &Domain) -> f64 {
    let step = 1e-5;
    domain
        .shape
        .boundary_samples(256)
        .into_iter()
        .map(|(p, eta)| {
            // unit tangent in the chart: theta direction has length xi(r)
            let (da, db, len) = match domain.shape {
                Shape::Rectangle { .. } => (-eta[1] * step, eta[0] * step, step),
                _ => (0.0, step, step * model.xi(p.a)),
            };
            let plus = domain.phi(LeafPoint::new(p.a + da, p.b + db));
            let minus = domain.phi(LeafPoint::new(p.a - da, p.b - db));
            ((plus - minus) / (2.0 * len)).abs()
        })
        .fold(0.0, f64::max)
}

/// Searches `K in {1, 2, ..., 2^30}` for the local barriers
/// `phi_ext +- psi(d)` on the strip `d <= eps`: the discrete residual must have
/// the right sign at strip nodes and the barrier must bound `u` at the nodes
/// just inside the strip.
pub fn boundary_gradient_barrier(
    model: &AmbientModel,
    domain: &Domain,
    u: &ScalarField,
    h: &dyn SmoothField,
    params: &BarrierParams,
) -> Result<GradientBarrierReport, BarrierError> {
    let grid = u.grid().clone();
    let op = Operator::new(model, grid.clone())?;
    let hv = sampled_h(&grid, h);
    let d: Vec<f64> = grid.points().map(|p| domain.distance_to_boundary(p)).collect::<Result<_, _>>()?;
    let phi_ext: Vec<f64> = grid.points().map(|p| domain.phi_extended(p)).collect();
    let strip: Vec<usize> = grid.interior_nodes().into_iter().filter(|&k| d[k] <= params.epsilon).collect();
    let mut inside: Vec<usize> = strip
        .iter()
        .flat_map(|&k| op.dependencies(k))
        .filter(|&k| !grid.is_boundary(k) && d[k] > params.epsilon)
        .collect();
    inside.sort_unstable();
    inside.dedup();

    let mut cyl_plus = f64::INFINITY;
    let mut cyl_minus = f64::INFINITY;
    for (p, _) in domain.shape.boundary_samples(64) {
        let hc = cylinder_mean_curvature_at(model, domain, p, 0.0)?;
        let hp = h.value(p);
        cyl_plus = cyl_plus.min(hc + hp);
        cyl_minus = cyl_minus.min(hc - hp);
    }

    let search = |sign: f64, precondition: bool| -> GradientBarrierSide {
        if !precondition || strip.is_empty() {
            return GradientBarrierSide { precondition, k: None };
        }
        let mut k = 1.0;
        while k <= (1u64 << 30) as f64 {
            let trial = BarrierParams { k, ..*params };
            let w: Vec<f64> = (0..grid.len()).map(|i| phi_ext[i] + sign * trial.psi(d[i])).collect();
            let residual_ok = strip.iter().all(|&i| sign * op.residual_at(&w, &hv, i) < 0.0);
            let bounds_ok = inside.iter().all(|&i| sign * (w[i] - u.values()[i]) >= -1e-12);
            if residual_ok && bounds_ok {
                return GradientBarrierSide { precondition, k: Some(k) };
            }
            k *= 2.0;
        }
        GradientBarrierSide { precondition, k: None }
    };
    let upper = search(1.0, cyl_plus >= -1e-12);
    let lower = search(-1.0, cyl_minus >= -1e-12);
    let psi_d1_at_zero = match (upper.k, lower.k) {
        (Some(a), Some(b)) => Some(BarrierParams { k: a.max(b), ..*params }.psi_d1_at_zero()),
        _ => None,
    };
    let sup_boundary_gradient = grid
        .boundary_nodes()
        .into_iter()
        .map(|k| {
            let g = op.gradient(u.values(), k);
            g[0].hypot(g[1])
        })
        .fold(0.0, f64::max);
    Ok(GradientBarrierReport {
        upper,
        lower,
        psi_d1_at_zero,
        sup_boundary_gradient,
        sup_data_gradient: boundary_data_gradient(model, domain),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    One,
    Two,
    Three,
}

impl Theorem {
    pub fn id(self) -> u8 {
        match self {
            Theorem::One => 1,
            Theorem::Two => 2,
            Theorem::Three => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Theorem::One),
            2 => Some(Theorem::Two),
            3 => Some(Theorem::Three),
            _ => None,
        }
    }
}

/// One inequality `lhs <= rhs` (or `>=`, see `name`) of a hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub theorem: u8,
    pub n: usize,
    pub inf_h_cyl: f64,
    pub sup_abs_h: f64,
    pub ricci_lower_bound: f64,
    pub r0: f64,
    pub serrin_f: Option<f64>,
    pub k: Option<f64>,
    pub sphere_radius: Option<f64>,
    pub conditions: Vec<Condition>,
    pub verdict: bool,
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theorem = {}", self.theorem)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "inf_h_cyl = {:.16e}", self.inf_h_cyl)?;
        writeln!(f, "sup_abs_h = {:.16e}", self.sup_abs_h)?;
        writeln!(f, "ricci_lower_bound = {:.16e}", self.ricci_lower_bound)?;
        writeln!(f, "r0 = {:.16e}", self.r0)?;
        if let Some(v) = self.serrin_f {
            writeln!(f, "serrin_f = {v:.16e}")?;
        }
        if let Some(v) = self.k {
            writeln!(f, "k = {v:.16e}")?;
        }
        if let Some(v) = self.sphere_radius {
            writeln!(f, "sphere_radius = {v:.16e}")?;
        }
        for c in &self.conditions {
            writeln!(f, "{} = {} ({:.16e} vs {:.16e})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.lhs, c.rhs)?;
        }
        writeln!(f, "verdict = {}", if self.verdict { "PASS" } else { "FAIL" })
    }
}

/// `sup |g|` over a 64 x 64 grid of cell centres plus boundary samples.
pub fn sup_abs_on_domain(domain: &Domain, g: &dyn SmoothField) -> f64 {
    const S: usize = 64;
    let mid = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * (k as f64 + 0.5) / S as f64;
    let tau = 2.0 * std::f64::consts::PI;
    let interior: Vec<LeafPoint> = match domain.shape {
        Shape::Disc { r0 } => (0..S).flat_map(|i| (0..S).map(move |j| LeafPoint::new(mid(0.0, r0, i), mid(0.0, tau, j)))).collect(),
        Shape::Annulus { r_in, r_out } => {
            (0..S).flat_map(|i| (0..S).map(move |j| LeafPoint::new(mid(r_in, r_out, i), mid(0.0, tau, j)))).collect()
        }
        Shape::Rectangle { x0, x1, y0, y1 } => {
            (0..S).flat_map(|i| (0..S).map(move |j| LeafPoint::new(mid(x0, x1, i), mid(y0, y1, j)))).collect()
        }
    };
    interior
        .into_iter()
        .chain(domain.shape.boundary_samples(S).into_iter().map(|(p, _)| p))
        .map(|p| g.value(p).abs())
        .fold(0.0, f64::max)
}

/// Evaluates the hypotheses of the existence theorems.
///
/// * 1: `H_cyl >= 0`, `Ric >= -n (inf H_cyl)^2`, `sup |H| <= inf H_cyl`.
/// * 2: `H_cyl >= 0`, `sup |H| <= inf H_cyl` and `r0` below the geodesic
///   sphere radius for `k = max(-Ric / (n - 1), 0)`; `k = 0` uses the
///   Euclidean limit `1 / sup |H|`.
/// * 3: `n sup |H| <= F(r0)` on a rotational leaf.
pub fn check_theorem_hypotheses(
    model: &AmbientModel,
    domain: &Domain,
    h: &dyn SmoothField,
    theorem: Theorem,
) -> Result<HypothesisReport, BarrierError> {
    model.check_domain(domain)?;
    let n = model.dim();
    let nf = n as f64;
    let inf_h_cyl = cylinder_mean_curvature(model, domain, 0.0)?;
    let sup_abs_h = sup_abs_on_domain(domain, h);
    let ric = ricci_lower_bound(model, domain);
    let r0 = domain.shape.enclosing_radius();
    let mean_convex = Condition { name: "h_cyl_nonnegative", lhs: inf_h_cyl, rhs: 0.0, pass: inf_h_cyl >= 0.0 };
    let serrin = Condition { name: "serrin_condition", lhs: sup_abs_h, rhs: inf_h_cyl, pass: sup_abs_h <= inf_h_cyl };
    let mut report = HypothesisReport {
        theorem: theorem.id(),
        n,
        inf_h_cyl,
        sup_abs_h,
        ricci_lower_bound: ric,
        r0,
        serrin_f: None,
        k: None,
        sphere_radius: None,
        conditions: Vec::new(),
        verdict: false,
    };
    match theorem {
        Theorem::One => {
            let bound = -nf * inf_h_cyl * inf_h_cyl;
            report.conditions = vec![
                mean_convex,
                Condition { name: "ricci_bound", lhs: ric, rhs: bound, pass: ric >= bound - 1e-12 },
                serrin,
            ];
        }
        Theorem::Two => {
            let k = (-ric / (nf - 1.0)).max(0.0);
            let radius = if k > 0.0 {
                sphere_barrier_radius(k, sup_abs_h)?
            } else if sup_abs_h > 0.0 {
                1.0 / sup_abs_h
            } else {
                f64::INFINITY
            };
            report.k = Some(k);
            report.sphere_radius = Some(radius);
            report.conditions = vec![
                mean_convex,
                serrin,
                Condition { name: "radius_bound", lhs: r0, rhs: radius, pass: r0 <= radius },
            ];
        }
        Theorem::Three => {
            let f = serrin_bound_f(model, r0)?;
            report.serrin_f = Some(f);
            report.conditions = vec![Condition {
                name: "rotational_bound",
                lhs: nf * sup_abs_h,
                rhs: f,
                pass: nf * sup_abs_h <= f + 1e-12,
            }];
        }
    }
    report.verdict = report.conditions.iter().all(|c| c.pass);
    Ok(report)
}
