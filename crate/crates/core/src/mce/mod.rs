//! The Killing-graph mean curvature equation
//! `div(grad u / W) - <grad u / W, X> - nH = 0`, `W^2 = f + |grad u|^2`:
//! discretization, Newton solve, coefficients and diagnostics.
//!
//! Since `X = -grad ln rho`, the operator equals `(1/rho) div(rho grad u / W)`,
//! which is what the finite-volume scheme discretizes.

mod manufactured;
mod newton;
mod operator;

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{AmbientModel, GeometryError};
use crate::grid::{FieldTag, Grid, GridError, ScalarField};

pub use manufactured::{manufactured_h, Jet, ManufacturedH};
pub use newton::{NewtonOptions, NewtonOutcome};
pub use operator::{expanded_operator, Operator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MceError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual_norm:e})")]
    NonConvergence { iterations: usize, residual_norm: f64, last: Vec<f64> },
    #[error("Newton diverged at iteration {iterations} (non-finite residual)")]
    Divergence { iterations: usize },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

/// Ellipticity data at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub w: Vec<f64>,
    /// `a^{ij}` in the orthonormal frame; on radial grids the second
    /// direction stands for every tangential direction.
    pub a: Vec<[[f64; 2]; 2]>,
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub big_lambda: Vec<f64>,
}

impl Coefficients {
    /// Eigenvalues of the assembled `a^{ij}` at node `k`, ascending.
    pub fn eigenvalues(&self, k: usize) -> [f64; 2] {
        let [[p, q], [_, s]] = self.a[k];
        let mean = 0.5 * (p + s);
        let rad = (0.25 * (p - s) * (p - s) + q * q).sqrt();
        [mean - rad, mean + rad]
    }
}

fn operator_for(model: &AmbientModel, grid: &Arc<Grid>) -> Result<Operator, MceError> {
    Operator::new(model, grid.clone())
}

fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<(), MceError> {
    if Arc::ptr_eq(a.grid(), b.grid()) || a.grid() == b.grid() {
        Ok(())
    } else {
        Err(MceError::Incompatible("fields live on different grids".into()))
    }
}

/// `W = sqrt(f + |grad u|^2)` at every node.
pub fn slope_function(model: &AmbientModel, u: &ScalarField) -> Result<ScalarField, MceError> {
    let op = operator_for(model, u.grid())?;
    let w = (0..u.grid().len())
        .map(|k| {
            let g = op.gradient(u.values(), k);
            (op.f_at(k) + g[0] * g[0] + g[1] * g[1]).sqrt()
        })
        .collect();
    Ok(ScalarField::new(u.grid().clone(), w, FieldTag::Slope)?)
}

pub fn coefficients(model: &AmbientModel, u: &ScalarField) -> Result<Coefficients, MceError> {
    let op = operator_for(model, u.grid())?;
    let len = u.grid().len();
    let mut c = Coefficients {
        w: Vec::with_capacity(len),
        a: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        lambda: Vec::with_capacity(len),
        big_lambda: Vec::with_capacity(len),
    };
    for k in 0..len {
        let p = op.gradient(u.values(), k);
        let f = op.f_at(k);
        let w2 = f + p[0] * p[0] + p[1] * p[1];
        let w = w2.sqrt();
        let x = op.drift_at(k);
        let a = [
            [(1.0 - p[0] * p[0] / w2) / w, -p[0] * p[1] / (w2 * w)],
            [-p[0] * p[1] / (w2 * w), (1.0 - p[1] * p[1] / w2) / w],
        ];
        c.w.push(w);
        c.a.push(a);
        c.b.push(-(f + w2) / (w2 * w) * (p[0] * x[0] + p[1] * x[1]));
        c.lambda.push(f / (w2 * w));
        c.big_lambda.push(1.0 / w);
    }
    Ok(c)
}

/// Conservative residual `Q[u]`; boundary entries are zero.
pub fn residual(model: &AmbientModel, u: &ScalarField, h: &ScalarField) -> Result<ScalarField, MceError> {
    same_grid(u, h)?;
    let op = operator_for(model, u.grid())?;
    Ok(ScalarField::new(u.grid().clone(), op.residual(u.values(), h.values()), FieldTag::Residual)?)
}

/// Expanded-form residual `a^{ij} u_{i;j} + b - nH`; boundary entries are zero.
pub fn expanded_residual(model: &AmbientModel, u: &ScalarField, h: &ScalarField) -> Result<ScalarField, MceError> {
    same_grid(u, h)?;
    let op = operator_for(model, u.grid())?;
    let grid = u.grid();
    let values = (0..grid.len())
        .map(|k| if grid.is_boundary(k) { 0.0 } else { op.expanded_residual_at(u.values(), h.values(), k) })
        .collect();
    Ok(ScalarField::new(grid.clone(), values, FieldTag::Residual)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub u: ScalarField,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Damped Newton solve of `Q[u] = 0`, `u = phi` on boundary nodes (interior
/// entries of `phi` are ignored).
pub fn newton_solve(
    model: &AmbientModel,
    h: &ScalarField,
    phi: &ScalarField,
    u0: &ScalarField,
    opts: &NewtonOptions,
) -> Result<NewtonReport, MceError> {
    same_grid(h, phi)?;
    same_grid(h, u0)?;
    let op = operator_for(model, h.grid())?;
    let out = op.newton(h.values(), phi.values(), u0.values(), opts)?;
    Ok(NewtonReport {
        u: ScalarField::new(h.grid().clone(), out.u, FieldTag::Height)?,
        iterations: out.iterations,
        residual_norm: out.residual_norm,
    })
}

/// Upward unit normal `N = (1/W)(f d_s - grad u)` of the graph over a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitNormal {
    /// Coefficient of `d_s`, equal to `f / W`.
    pub vertical: f64,
    /// Leaf part `-grad u / W` in the orthonormal frame.
    pub leaf: [f64; 2],
    /// `<Y, N> = rho^2 f / W = 1 / W`.
    pub y_dot_n: f64,
    /// `<N, N>` in the ambient metric.
    pub norm_sq: f64,
    pub w: f64,
}

pub fn unit_normal(model: &AmbientModel, u: &ScalarField, k: usize) -> Result<UnitNormal, MceError> {
    let op = operator_for(model, u.grid())?;
    let g = op.gradient(u.values(), k);
    let (f, rho) = (op.f_at(k), op.rho_at(k));
    let w = (f + g[0] * g[0] + g[1] * g[1]).sqrt();
    let vertical = f / w;
    let leaf = [-g[0] / w, -g[1] / w];
    Ok(UnitNormal {
        vertical,
        leaf,
        y_dot_n: rho * rho * vertical,
        norm_sq: rho * rho * vertical * vertical + leaf[0] * leaf[0] + leaf[1] * leaf[1],
        w,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientDiagnostic {
    /// `tau = exp(2 C u) |grad u|^2` per node.
    pub tau: ScalarField,
    pub argmax: usize,
    pub max_tau: f64,
    pub max_gradient: f64,
}

pub fn gradient_diagnostic(model: &AmbientModel, u: &ScalarField, c: f64) -> Result<GradientDiagnostic, MceError> {
    if !(c > 0.0) {
        return Err(MceError::Incompatible(format!("diagnostic constant C = {c} must be positive")));
    }
    let op = operator_for(model, u.grid())?;
    let mut tau = Vec::with_capacity(u.grid().len());
    let mut max_gradient = 0.0f64;
    for k in 0..u.grid().len() {
        let g = op.gradient(u.values(), k);
        let v = g[0] * g[0] + g[1] * g[1];
        max_gradient = max_gradient.max(v.sqrt());
        tau.push((2.0 * c * u.values()[k]).exp() * v);
    }
    let (argmax, max_tau) = tau.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, &t)| if t > b.1 { (k, t) } else { b });
    Ok(GradientDiagnostic {
        tau: ScalarField::new(u.grid().clone(), tau, FieldTag::Other)?,
        argmax,
        max_tau,
        max_gradient,
    })
}
