//! Manufactured-solution battery: pairs `(u*, H*)` with `H*` computed from
//! `u*`, solved on a sequence of grids to measure the observed order.

use std::sync::Arc;

use thiserror::Error;

use crate::continuation::{continuity_solve, ContinuationError, ContinuationOptions};
use crate::field::SmoothField;
use crate::functions::ScalarFn;
use crate::geometry::{AmbientModel, Domain, GeometryError, LeafMetric, LeafPoint, Shape, WarpingFunction};
use crate::grid::{FieldTag, Grid, GridError, ScalarField};
use crate::mce::{manufactured_h, newton_solve, MceError, NewtonOptions};
use crate::rotational::{graph_flux_check, FluxCheck, RotationalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatteryError {
    #[error("unknown battery case {0:?}")]
    UnknownCase(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error(transparent)]
    Flux(#[from] RotationalError),
}

impl From<MceError> for BatteryError {
    fn from(e: MceError) -> Self {
        BatteryError::Continuation(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    Radial { m: usize },
    Polar { m_r: usize, m_theta: usize },
    Cartesian { m_x: usize, m_y: usize },
}

impl GridSpec {
    pub fn build(&self, shape: Shape, dim: usize) -> Result<Grid, GridError> {
        match *self {
            GridSpec::Radial { m } => Grid::radial(shape, dim, m),
            GridSpec::Polar { m_r, m_theta } => Grid::polar(shape, m_r, m_theta),
            GridSpec::Cartesian { m_x, m_y } => Grid::cartesian(shape, m_x, m_y),
        }
    }

    /// Same layout with `m` cells in the first direction (and proportionally
    /// many in the second).
    pub fn with_cells(&self, m: usize) -> GridSpec {
        match *self {
            GridSpec::Radial { .. } => GridSpec::Radial { m },
            GridSpec::Polar { m_r, m_theta } => GridSpec::Polar { m_r: m, m_theta: (m * m_theta / m_r).max(8) & !1 },
            GridSpec::Cartesian { m_x, m_y } => GridSpec::Cartesian { m_x: m, m_y: (m * m_y / m_x).max(4) },
        }
    }
}

/// A manufactured problem: exact solution, matching curvature and grids.
#[derive(Clone)]
pub struct MmsCase {
    pub name: &'static str,
    pub model: AmbientModel,
    /// Boundary data is the trace of the exact solution.
    pub domain: Domain,
    pub exact: Arc<dyn SmoothField>,
    pub curvature: Arc<dyn SmoothField>,
    pub grids: Vec<GridSpec>,
}

impl std::fmt::Debug for MmsCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MmsCase").field("name", &self.name).field("grids", &self.grids).finish()
    }
}

fn rotsym(xi: ScalarFn, rho: ScalarFn, n: usize) -> AmbientModel {
    AmbientModel::new(LeafMetric::rotsym(xi, n).expect("valid pole"), WarpingFunction::new(rho))
}

fn manufactured(model: AmbientModel, shape: Shape, exact: Arc<dyn SmoothField>) -> (AmbientModel, Domain, Arc<dyn SmoothField>) {
    let h: Arc<dyn SmoothField> = Arc::new(manufactured_h(&model, exact.clone()));
    (model, Domain::new(shape, exact), h)
}

impl MmsCase {
    pub const NAMES: [&'static str; 7] =
        ["hemisphere", "warped-radial", "warped-polar", "polar-dome", "cartesian", "spherical-3d", "zero"];

    pub fn named(name: &str) -> Result<MmsCase, BatteryError> {
        Ok(match name {
            "hemisphere" => Self::hemisphere(),
            "warped-radial" => Self::warped_radial(),
            "warped-polar" => Self::warped_polar(),
            "polar-dome" => Self::polar_dome(),
            "cartesian" => Self::cartesian(),
            "spherical-3d" => Self::spherical_3d(),
            "zero" => Self::zero(),
            other => return Err(BatteryError::UnknownCase(other.to_string())),
        })
    }

    /// Spherical cap of radius 1 over the disc of radius 0.8 in flat space.
    pub fn hemisphere() -> MmsCase {
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| (1.0 - p.a * p.a).sqrt() - 0.6);
        MmsCase {
            name: "hemisphere",
            model: rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 2),
            domain: Domain::new(Shape::Disc { r0: 0.8 }, exact.clone()),
            exact,
            curvature: Arc::new(|_: LeafPoint| -1.0),
            grids: [64, 128, 256].map(|m| GridSpec::Radial { m }).to_vec(),
        }
    }

    /// Radial bump on the hyperbolic leaf with `rho = cosh r`.
    pub fn warped_radial() -> MmsCase {
        let model = rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2);
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| 0.3 * (1.0 - p.a * p.a) + 0.1);
        let (model, domain, curvature) = manufactured(model, Shape::Disc { r0: 1.0 }, exact.clone());
        MmsCase { name: "warped-radial", model, domain, exact, curvature, grids: [64, 128, 256].map(|m| GridSpec::Radial { m }).to_vec() }
    }

    /// Non-radial `0.1 r^2 cos(theta)` on the hyperbolic leaf with `rho = cosh r`.
    pub fn warped_polar() -> MmsCase {
        let model = rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2);
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| 0.1 * p.a * p.a * p.b.cos());
        let (model, domain, curvature) = manufactured(model, Shape::Disc { r0: 1.0 }, exact.clone());
        let grids = [16, 32, 64].map(|m| GridSpec::Polar { m_r: m, m_theta: 4 * m }).to_vec();
        MmsCase { name: "warped-polar", model, domain, exact, curvature, grids }
    }

    /// Tilted dome on the hyperbolic leaf; unlike `warped_polar` its net flux
    /// does not vanish.
    pub fn polar_dome() -> MmsCase {
        let model = rotsym(ScalarFn::Sinh, ScalarFn::Cosh, 2);
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| 0.2 * (1.0 - p.a * p.a) + 0.1 * p.a * p.a * p.b.cos());
        let (model, domain, curvature) = manufactured(model, Shape::Disc { r0: 1.0 }, exact.clone());
        let grids = [16, 32, 64].map(|m| GridSpec::Polar { m_r: m, m_theta: 4 * m }).to_vec();
        MmsCase { name: "polar-dome", model, domain, exact, curvature, grids }
    }

    /// Flat cartesian leaf with `rho = cosh x` on a square.
    pub fn cartesian() -> MmsCase {
        let model = AmbientModel::new(LeafMetric::CartesianFlat, WarpingFunction::new(ScalarFn::Cosh));
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| 0.2 * (p.a + 0.3).sin() * p.b.cos());
        let shape = Shape::Rectangle { x0: -0.5, x1: 0.5, y0: -0.5, y1: 0.5 };
        let (model, domain, curvature) = manufactured(model, shape, exact.clone());
        let grids = [16, 32, 64].map(|m| GridSpec::Cartesian { m_x: m, m_y: m }).to_vec();
        MmsCase { name: "cartesian", model, domain, exact, curvature, grids }
    }

    /// Three-dimensional spherical leaf (`xi = sin r`), radial data.
    pub fn spherical_3d() -> MmsCase {
        let model = rotsym(ScalarFn::Sin, ScalarFn::Constant(1.0), 3);
        let exact: Arc<dyn SmoothField> = Arc::new(|p: LeafPoint| 0.3 * p.a.cos());
        let (model, domain, curvature) = manufactured(model, Shape::Disc { r0: 1.0 }, exact.clone());
        MmsCase { name: "spherical-3d", model, domain, exact, curvature, grids: [32, 64, 128].map(|m| GridSpec::Radial { m }).to_vec() }
    }

    /// Minimal graph with zero data: the discrete solution is exactly zero.
    pub fn zero() -> MmsCase {
        MmsCase {
            name: "zero",
            model: rotsym(ScalarFn::Identity, ScalarFn::Constant(1.0), 2),
            domain: Domain::homogeneous(Shape::Disc { r0: 1.0 }),
            exact: Arc::new(|_: LeafPoint| 0.0),
            curvature: Arc::new(|_: LeafPoint| 0.0),
            grids: [16, 32, 64].map(|m| GridSpec::Radial { m }).to_vec(),
        }
    }

    /// The cases whose convergence order is checked.
    pub fn standard() -> Vec<MmsCase> {
        vec![
            Self::hemisphere(),
            Self::warped_radial(),
            Self::warped_polar(),
            Self::polar_dome(),
            Self::cartesian(),
            Self::spherical_3d(),
        ]
    }

    pub fn with_grids(mut self, grids: Vec<GridSpec>) -> MmsCase {
        self.grids = grids;
        self
    }

    pub fn grid(&self, spec: GridSpec) -> Result<Arc<Grid>, BatteryError> {
        Ok(Arc::new(spec.build(self.domain.shape, self.model.dim())?))
    }

    /// `(H, phi)` sampled on `grid`.
    pub fn discretize(&self, grid: &Arc<Grid>) -> (ScalarField, ScalarField) {
        let h = ScalarField::sample(grid.clone(), self.curvature.as_ref(), FieldTag::MeanCurvature);
        let phi = ScalarField::sample(grid.clone(), self.exact.as_ref(), FieldTag::Height);
        (h, phi)
    }
}

/// Solution of one case on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsSolve {
    pub u: ScalarField,
    pub h: ScalarField,
    pub max_error: f64,
    pub iterations: usize,
}

/// Newton from the boundary data extended along normals; the continuity
/// method if that fails.
pub fn solve_on(case: &MmsCase, spec: GridSpec) -> Result<MmsSolve, BatteryError> {
    let grid = case.grid(spec)?;
    let (h, phi) = case.discretize(&grid);
    let domain = &case.domain;
    let start = ScalarField::sample(grid.clone(), &|p: LeafPoint| domain.phi_extended(p), FieldTag::Height);
    let (u, iterations) = match newton_solve(&case.model, &h, &phi, &start, &NewtonOptions::default()) {
        Ok(rep) => (rep.u, rep.iterations),
        Err(_) => {
            let st = continuity_solve(&case.model, &h, &phi, &ContinuationOptions::default())?;
            let its = st.history.iter().map(|s| s.iterations).sum();
            (st.u, its)
        }
    };
    let max_error = u.max_diff(&phi);
    Ok(MmsSolve { u, h, max_error, iterations })
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub max_error: f64,
    /// `ln(e_prev / e) / ln(h_prev / h)`; absent on the first row.
    pub order: Option<f64>,
    pub iterations: usize,
    pub flux: FluxCheck,
    pub flux_order: Option<f64>,
}

fn observed_order(prev: (f64, f64), cur: (f64, f64)) -> Option<f64> {
    let (h0, e0) = prev;
    let (h1, e1) = cur;
    if e0 > 0.0 && e1 > 0.0 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

/// Solves `case` on each of its grids in order.
pub fn run_case(case: &MmsCase) -> Result<Vec<ConvergenceRow>, BatteryError> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(case.grids.len());
    for &spec in &case.grids {
        let s = solve_on(case, spec)?;
        let flux = graph_flux_check(&case.model, &s.u, &s.h)?;
        let h = s.u.grid().h();
        let (order, flux_order) = match rows.last() {
            Some(p) => (
                observed_order((p.h, p.max_error), (h, s.max_error)),
                observed_order((p.h, p.flux.scaled_residual()), (h, flux.scaled_residual())),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow { h, max_error: s.max_error, order, iterations: s.iterations, flux, flux_order });
    }
    Ok(rows)
}

/// CSV with header `h,max_error,order`; the first order is empty.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("h,max_error,order\n");
    for r in rows {
        let order = r.order.map(|o| format!("{o:.6}")).unwrap_or_default();
        out.push_str(&format!("{:.16e},{:.16e},{}\n", r.h, r.max_error, order));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_case_is_exact() {
        let rows = run_case(&MmsCase::zero()).unwrap();
        assert!(rows.iter().all(|r| r.max_error == 0.0 && r.order.is_none()));
        assert!(rows.iter().all(|r| r.flux.absolute_residual == 0.0));
    }

    #[test]
    fn names_round_trip() {
        for name in MmsCase::NAMES {
            assert_eq!(MmsCase::named(name).unwrap().name, name);
        }
        assert!(matches!(MmsCase::named("bogus"), Err(BatteryError::UnknownCase(_))));
    }

    #[test]
    fn order_of_exact_power_law() {
        let o = observed_order((0.1, 3e-4), (0.05, 7.5e-5)).unwrap();
        assert!((o - 2.0).abs() < 1e-12);
        assert_eq!(observed_order((0.1, 0.0), (0.05, 0.0)), None);
    }

    #[test]
    fn csv_layout() {
        let rows = run_case(&MmsCase::zero().with_grids(vec![GridSpec::Radial { m: 8 }])).unwrap();
        let csv = convergence_csv(&rows);
        assert!(csv.starts_with("h,max_error,order\n"));
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn with_cells_keeps_aspect() {
        assert_eq!(GridSpec::Polar { m_r: 16, m_theta: 64 }.with_cells(32), GridSpec::Polar { m_r: 32, m_theta: 128 });
        assert_eq!(GridSpec::Radial { m: 4 }.with_cells(9), GridSpec::Radial { m: 9 });
    }
}
