//! Damped Newton iteration for the discrete Dirichlet problem.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::operator::Operator;
use super::MceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub jacobian_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 20, jacobian_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    /// Residual evaluations tested against the tolerance; a converged
    /// initial guess counts as one.
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Relative Newton correction below which the iterate counts as converged.
const STAGNATION: f64 = 1e-12;

fn l2_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

impl Operator {
    /// Solves `residual(u, h) = 0` on interior nodes with `u = phi` on the
    /// boundary, starting from `u0`.
    pub fn newton(&self, h: &[f64], phi: &[f64], u0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome, MceError> {
        let grid = self.grid().clone();
        let len = grid.len();
        for (name, v) in [("H", h), ("phi", phi), ("u0", u0)] {
            if v.len() != len {
                return Err(MceError::Incompatible(format!("{name} has {} values, grid has {len}", v.len())));
            }
        }
        let interior = grid.interior_nodes();
        let mut unknown = vec![usize::MAX; len];
        for (c, &k) in interior.iter().enumerate() {
            unknown[k] = c;
        }
        // rows_of[k]: interior rows whose stencil reads node k
        let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); len];
        for &k in &interior {
            for d in self.dependencies(k) {
                rows_of[d].push(k);
            }
        }

        let mut u = u0.to_vec();
        for k in grid.boundary_nodes() {
            u[k] = phi[k];
        }
        let eval = |u: &[f64]| -> Vec<f64> { interior.iter().map(|&k| self.residual_at(u, h, k)).collect() };

        let mut r = eval(&u);
        let mut norm = max_norm(&r);
        if !norm.is_finite() {
            return Err(MceError::Divergence { iterations: 1 });
        }
        let mut iterations = 0;
        loop {
            iterations += 1;
            if norm <= opts.tol {
                return Ok(NewtonOutcome { u, iterations, residual_norm: norm });
            }
            if iterations > opts.max_iter {
                return Err(MceError::NonConvergence { iterations, residual_norm: norm, last: u });
            }

            let mut triplets = Vec::with_capacity(interior.len() * 12);
            let mut work = u.clone();
            for (c, &k) in interior.iter().enumerate() {
                let step = opts.jacobian_step * (1.0 + u[k].abs());
                work[k] = u[k] + step;
                let actual = work[k] - u[k];
                for &row in &rows_of[k] {
                    let rr = unknown[row];
                    let d = (self.residual_at(&work, h, row) - r[rr]) / actual;
                    if d != 0.0 {
                        triplets.push(Triplet::new(rr, c, d));
                    }
                }
                work[k] = u[k];
            }
            let n = interior.len();
            let jac = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
                .map_err(|e| MceError::LinearSolve(format!("{e:?}")))?;
            let lu = jac.sp_lu().map_err(|e| MceError::LinearSolve(format!("{e:?}")))?;
            let rhs = Mat::<f64>::from_fn(n, 1, |i, _| -r[i]);
            let delta = lu.solve(&rhs);
            if (0..n).any(|i| !delta[(i, 0)].is_finite()) {
                return Err(MceError::LinearSolve("singular Jacobian".into()));
            }
            // the residual has reached its rounding floor above `tol`
            let step = (0..n).fold(0.0f64, |m, i| m.max(delta[(i, 0)].abs()));
            let size = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if step <= STAGNATION * (1.0 + size) {
                return Ok(NewtonOutcome { u, iterations, residual_norm: norm });
            }

            // Armijo backtracking on the 2-norm, for which the Newton step is a
            // descent direction
            let merit = l2_norm(&r);
            let mut alpha = 1.0;
            let mut accepted = None;
            let mut any_finite = false;
            for _ in 0..=opts.max_halvings {
                let mut trial = u.clone();
                for (c, &k) in interior.iter().enumerate() {
                    trial[k] += alpha * delta[(c, 0)];
                }
                let rt = eval(&trial);
                let nt = l2_norm(&rt);
                if nt.is_finite() {
                    any_finite = true;
                    if nt <= (1.0 - 1e-4 * alpha) * merit {
                        let nt = max_norm(&rt);
                        accepted = Some((trial, rt, nt));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, rt, nt)) => {
                    u = trial;
                    r = rt;
                    norm = nt;
                }
                None if !any_finite => return Err(MceError::Divergence { iterations }),
                None => return Err(MceError::NonConvergence { iterations, residual_norm: norm, last: u }),
            }
        }
    }
}
