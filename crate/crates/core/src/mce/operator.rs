//! Finite-volume discretization of `(1/rho) div(rho grad u / W) - nH` and a
//! direct node-based discretization of the expanded form
//! `a^{ij} u_{i;j} + b - nH`, used to cross-check the first.

use std::sync::Arc;

use crate::geometry::{AmbientModel, Domain, LeafMetric, LeafPoint, Shape};
use crate::grid::{Grid, GridKind};

use super::MceError;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

fn gauss3(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * GAUSS3.iter().map(|&(x, w)| w * g(mid + half * x)).sum::<f64>()
}

/// `a^{ij} u_{i;j} + b` at a point, from the gradient and covariant Hessian in
/// an orthonormal frame. `extra` lists Hessian diagonal entries in further
/// frame directions along which the gradient vanishes.
pub fn expanded_operator(f: f64, drift: [f64; 2], grad: [f64; 2], hess: [[f64; 2]; 2], extra: f64) -> f64 {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    let w2 = f + g2;
    let w = w2.sqrt();
    let trace = hess[0][0] + hess[1][1] + extra;
    let php = grad[0] * grad[0] * hess[0][0] + 2.0 * grad[0] * grad[1] * hess[0][1] + grad[1] * grad[1] * hess[1][1];
    let b = -(f + w2) / (w2 * w) * (grad[0] * drift[0] + grad[1] * drift[1]);
    (trace - php / w2) / w + b
}

/// Precomputed geometry of the discrete operator on one grid.
#[derive(Debug, Clone)]
pub struct Operator {
    grid: Arc<Grid>,
    n: usize,
    h1: f64,
    h2: f64,
    // per first index
    rho: Vec<f64>,
    f: Vec<f64>,
    xi: Vec<f64>,
    xi1: Vec<f64>,
    drift: Vec<f64>,
    vol: Vec<f64>,
    // per face between first indices i and i + 1
    face_f: Vec<f64>,
    face_xi: Vec<f64>,
    face_w: Vec<f64>,
}

impl Operator {
    pub fn new(model: &AmbientModel, grid: Arc<Grid>) -> Result<Self, MceError> {
        match (&model.leaf, grid.kind()) {
            (LeafMetric::RotSym { dim, .. }, GridKind::Radial) if *dim == grid.dim() => {}
            (LeafMetric::RotSym { dim: 2, .. }, GridKind::Polar) => {}
            (LeafMetric::CartesianFlat, GridKind::Cartesian) => {}
            _ => {
                return Err(MceError::Incompatible(format!(
                    "{} grid of dimension {} on a {}-dimensional {} leaf",
                    grid.kind().name(),
                    grid.dim(),
                    model.dim(),
                    if model.leaf.is_rotsym() { "rotational" } else { "cartesian" }
                )))
            }
        }
        model.check_domain(&Domain::homogeneous(*grid.shape()))?;

        let n = model.dim();
        let (h1, h2) = grid.spacing();
        let a = grid.first_coords();
        let last = a.len() - 1;
        let rho: Vec<f64> = a.iter().map(|&t| model.warp.rho(t)).collect();
        let f: Vec<f64> = a.iter().map(|&t| model.warp.f(t)).collect();
        let xi: Vec<f64> = a.iter().map(|&t| model.xi(t)).collect();
        let xi1: Vec<f64> = a.iter().map(|&t| model.xi_d1(t)).collect();
        let drift: Vec<f64> = a.iter().map(|&t| model.drift_field(LeafPoint::new(t, 0.0))[0]).collect();

        let faces: Vec<f64> = a.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let face_f = faces.iter().map(|&t| model.warp.f(t)).collect();
        let face_xi: Vec<f64> = faces.iter().map(|&t| model.xi(t)).collect();
        let density = |t: f64| model.warp.rho(t) * model.volume_density(t);
        let face_w = faces
            .iter()
            .map(|&t| match grid.kind() {
                GridKind::Radial => density(t),
                GridKind::Polar => density(t) * h2,
                GridKind::Cartesian => model.warp.rho(t) * h2,
            })
            .collect();

        // dual cell of each first index, clipped to the domain
        let lo = |i: usize| if i == 0 { if grid.has_pole() { 0.0 } else { a[0] } } else { faces[i - 1] };
        let hi = |i: usize| if i == last { a[last] } else { faces[i] };
        let vol = (0..=last)
            .map(|i| {
                let radial = gauss3(density, lo(i), hi(i));
                match grid.kind() {
                    GridKind::Radial => radial,
                    GridKind::Polar => radial * h2,
                    GridKind::Cartesian => gauss3(|t| model.warp.rho(t), lo(i), hi(i)) * h2,
                }
            })
            .collect();

        Ok(Operator { grid, n, h1, h2, rho, f, xi, xi1, drift, vol, face_f, face_xi, face_w })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn m2(&self) -> usize {
        self.grid.n_second()
    }

    fn at(&self, u: &[f64], i: usize, j: usize) -> f64 {
        u[i * self.m2() + j]
    }

    /// Value across the pole: the staggered ring reflected through `r = 0`.
    fn below(&self, u: &[f64], i: usize, j: usize) -> f64 {
        if i == 0 {
            let m = self.m2();
            self.at(u, 0, (j + m / 2) % m)
        } else {
            self.at(u, i - 1, j)
        }
    }

    fn jp(&self, j: usize) -> usize {
        (j + 1) % self.m2()
    }

    fn jm(&self, j: usize) -> usize {
        (j + self.m2() - 1) % self.m2()
    }

    fn polar_dtheta(&self, u: &[f64], i: usize, j: usize) -> f64 {
        (self.at(u, i, self.jp(j)) - self.at(u, i, self.jm(j))) / (2.0 * self.h2)
    }

    fn centered_first(&self, u: &[f64], i: usize, j: usize) -> f64 {
        (self.at(u, i + 1, j) - self.below(u, i, j)) / (2.0 * self.h1)
    }

    fn centered_second(&self, u: &[f64], i: usize, j: usize) -> f64 {
        (self.at(u, i, j + 1) - self.at(u, i, j - 1)) / (2.0 * self.h2)
    }

    /// Flux `rho xi^{n-1} u_r / W` (times face measure) between `i` and `i + 1`.
    fn first_flux(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let s = (self.at(u, i + 1, j) - self.at(u, i, j)) / self.h1;
        let t = match self.grid.kind() {
            GridKind::Radial => 0.0,
            GridKind::Polar => 0.5 * (self.polar_dtheta(u, i, j) + self.polar_dtheta(u, i + 1, j)) / self.face_xi[i],
            GridKind::Cartesian => 0.5 * (self.centered_second(u, i, j) + self.centered_second(u, i + 1, j)),
        };
        self.face_w[i] * s / (self.face_f[i] + s * s + t * t).sqrt()
    }

    /// Flux across the face between `j` and `j + 1` on first index `i`.
    fn second_flux(&self, u: &[f64], i: usize, j: usize) -> f64 {
        match self.grid.kind() {
            GridKind::Radial => 0.0,
            GridKind::Polar => {
                let jp = self.jp(j);
                let s = (self.at(u, i, jp) - self.at(u, i, j)) / (self.h2 * self.xi[i]);
                let q = 0.5 * (self.centered_first(u, i, j) + self.centered_first(u, i, jp));
                self.rho[i] * self.h1 * s / (self.f[i] + s * s + q * q).sqrt()
            }
            GridKind::Cartesian => {
                let s = (self.at(u, i, j + 1) - self.at(u, i, j)) / self.h2;
                let q = 0.5 * (self.centered_first(u, i, j) + self.centered_first(u, i, j + 1));
                self.rho[i] * self.h1 * s / (self.f[i] + s * s + q * q).sqrt()
            }
        }
    }

    /// `(1/rho) div(rho grad u / W)` at interior node `k`, as a flux balance
    /// over its dual cell.
    pub fn divergence_at(&self, u: &[f64], k: usize) -> f64 {
        let (i, j) = self.grid.split(k);
        let mut net = self.first_flux(u, i, j);
        if i > 0 {
            net -= self.first_flux(u, i - 1, j);
        }
        match self.grid.kind() {
            GridKind::Radial => {}
            GridKind::Polar => net += self.second_flux(u, i, j) - self.second_flux(u, i, self.jm(j)),
            GridKind::Cartesian => net += self.second_flux(u, i, j) - self.second_flux(u, i, j - 1),
        }
        net / self.vol[i]
    }

    /// Conservative residual at interior node `k`.
    pub fn residual_at(&self, u: &[f64], h: &[f64], k: usize) -> f64 {
        self.divergence_at(u, k) - self.n as f64 * h[k]
    }

    /// Conservative residual at every node; boundary entries are zero.
    pub fn residual(&self, u: &[f64], h: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| if self.grid.is_boundary(k) { 0.0 } else { self.residual_at(u, h, k) })
            .collect()
    }

    /// Nodes the residual at interior node `k` reads.
    pub fn dependencies(&self, k: usize) -> Vec<usize> {
        let (i, j) = self.grid.split(k);
        let last = self.grid.n_first() - 1;
        let rows = i.saturating_sub(1)..=(i + 1).min(last);
        let mut deps: Vec<usize> = match self.grid.kind() {
            GridKind::Radial => rows.collect(),
            GridKind::Polar => {
                let mut d: Vec<usize> = rows
                    .flat_map(|ii| [self.jm(j), j, self.jp(j)].map(|jj| self.grid.index(ii, jj)))
                    .collect();
                if i == 0 && self.grid.has_pole() {
                    let opposite = (j + self.m2() / 2) % self.m2();
                    d.extend([self.jm(opposite), opposite, self.jp(opposite)].map(|jj| self.grid.index(0, jj)));
                }
                d
            }
            GridKind::Cartesian => rows.flat_map(|ii| (j - 1..=j + 1).map(move |jj| (ii, jj))).map(|(a, b)| self.grid.index(a, b)).collect(),
        };
        deps.sort_unstable();
        deps.dedup();
        deps
    }

    /// Derivative along the first coordinate at any node: centred inside
    /// (reflected through the pole), second-order one-sided on the boundary.
    fn first_derivative(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let last = self.grid.n_first() - 1;
        if i == last {
            (3.0 * self.at(u, i, j) - 4.0 * self.at(u, i - 1, j) + self.at(u, i - 2, j)) / (2.0 * self.h1)
        } else if i == 0 && !self.grid.has_pole() {
            (-3.0 * self.at(u, 0, j) + 4.0 * self.at(u, 1, j) - self.at(u, 2, j)) / (2.0 * self.h1)
        } else {
            self.centered_first(u, i, j)
        }
    }

    fn second_derivative(&self, u: &[f64], i: usize, j: usize) -> f64 {
        match self.grid.kind() {
            GridKind::Radial => 0.0,
            GridKind::Polar => self.polar_dtheta(u, i, j) / self.xi[i],
            GridKind::Cartesian => {
                let last = self.m2() - 1;
                if j == 0 {
                    (-3.0 * self.at(u, i, 0) + 4.0 * self.at(u, i, 1) - self.at(u, i, 2)) / (2.0 * self.h2)
                } else if j == last {
                    (3.0 * self.at(u, i, j) - 4.0 * self.at(u, i, j - 1) + self.at(u, i, j - 2)) / (2.0 * self.h2)
                } else {
                    self.centered_second(u, i, j)
                }
            }
        }
    }

    /// Gradient at node `k` in the orthonormal frame.
    pub fn gradient(&self, u: &[f64], k: usize) -> [f64; 2] {
        let (i, j) = self.grid.split(k);
        [self.first_derivative(u, i, j), self.second_derivative(u, i, j)]
    }

    /// `f` at node `k`.
    pub fn f_at(&self, k: usize) -> f64 {
        self.f[self.grid.split(k).0]
    }

    pub fn rho_at(&self, k: usize) -> f64 {
        self.rho[self.grid.split(k).0]
    }

    pub fn drift_at(&self, k: usize) -> [f64; 2] {
        [self.drift[self.grid.split(k).0], 0.0]
    }

    /// `int rho` over the dual cell of node `k`, clipped to the domain. On
    /// radial grids the unit-sphere factor is omitted.
    pub fn cell_measure(&self, k: usize) -> f64 {
        let (i, j) = self.grid.split(k);
        let v = self.vol[i];
        if self.grid.kind() == GridKind::Cartesian && (j == 0 || j == self.m2() - 1) {
            0.5 * v
        } else {
            v
        }
    }

    /// Expanded-form residual `a^{ij} u_{i;j} + b - nH` at interior node `k`
    /// from centred second differences.
    pub fn expanded_residual_at(&self, u: &[f64], h: &[f64], k: usize) -> f64 {
        let (i, j) = self.grid.split(k);
        let h1 = self.h1;
        let u0 = self.at(u, i, j);
        let urr = (self.at(u, i + 1, j) - 2.0 * u0 + self.below(u, i, j)) / (h1 * h1);
        let ur = self.centered_first(u, i, j);
        let n = self.n as f64;
        let value = match self.grid.kind() {
            GridKind::Radial => {
                let tang = self.xi1[i] / self.xi[i] * ur;
                expanded_operator(self.f[i], [self.drift[i], 0.0], [ur, 0.0], [[urr, 0.0], [0.0, tang]], (n - 2.0) * tang)
            }
            GridKind::Polar => {
                let (h2, xi, c) = (self.h2, self.xi[i], self.xi1[i] / self.xi[i]);
                let (jp, jm) = (self.jp(j), self.jm(j));
                let ut = self.polar_dtheta(u, i, j);
                let utt = (self.at(u, i, jp) - 2.0 * u0 + self.at(u, i, jm)) / (h2 * h2);
                let urt = (self.at(u, i + 1, jp) - self.at(u, i + 1, jm) - self.below(u, i, jp) + self.below(u, i, jm))
                    / (4.0 * h1 * h2);
                let hess = [[urr, (urt - c * ut) / xi], [(urt - c * ut) / xi, utt / (xi * xi) + c * ur]];
                expanded_operator(self.f[i], [self.drift[i], 0.0], [ur, ut / xi], hess, 0.0)
            }
            GridKind::Cartesian => {
                let h2 = self.h2;
                let uy = self.centered_second(u, i, j);
                let uyy = (self.at(u, i, j + 1) - 2.0 * u0 + self.at(u, i, j - 1)) / (h2 * h2);
                let uxy = (self.at(u, i + 1, j + 1) - self.at(u, i + 1, j - 1) - self.at(u, i - 1, j + 1)
                    + self.at(u, i - 1, j - 1))
                    / (4.0 * h1 * h2);
                expanded_operator(self.f[i], [self.drift[i], 0.0], [ur, uy], [[urr, uxy], [uxy, uyy]], 0.0)
            }
        };
        value - n * h[k]
    }

    /// `int_Gamma rho <grad u, eta_out> / W` by the composite rule along the
    /// boundary nodes, with one-sided normal derivatives. On radial grids the
    /// unit-sphere factor is omitted.
    pub fn boundary_flux(&self, u: &[f64]) -> f64 {
        let grid = &self.grid;
        let last = grid.n_first() - 1;
        let mut total = 0.0;
        for k in grid.boundary_nodes() {
            let (i, j) = grid.split(k);
            let g = self.gradient(u, k);
            let w = (self.f[i] + g[0] * g[0] + g[1] * g[1]).sqrt();
            let rho = self.rho[i];
            match grid.kind() {
                GridKind::Radial | GridKind::Polar => {
                    let out = if i == last { 1.0 } else { -1.0 };
                    let measure = match grid.kind() {
                        GridKind::Radial => self.xi[i].powi(self.n as i32 - 1),
                        _ => self.xi[i] * self.h2,
                    };
                    total += measure * rho * out * g[0] / w;
                }
                GridKind::Cartesian => {
                    let (nx, ny) = (last, self.m2() - 1);
                    let edge = |end: bool| if end { 0.5 } else { 1.0 };
                    if i == 0 || i == nx {
                        let out = if i == nx { 1.0 } else { -1.0 };
                        total += edge(j == 0 || j == ny) * self.h2 * rho * out * g[0] / w;
                    }
                    if j == 0 || j == ny {
                        let out = if j == ny { 1.0 } else { -1.0 };
                        total += edge(i == 0 || i == nx) * self.h1 * rho * out * g[1] / w;
                    }
                }
            }
        }
        total
    }

    /// Shape the operator was built for.
    pub fn shape(&self) -> &Shape {
        self.grid.shape()
    }
}
