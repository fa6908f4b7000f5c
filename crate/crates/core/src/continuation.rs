//! Continuity method: the family `Q_sigma[u] = div(...) - n sigma H`,
//! `u = sigma phi` on the boundary, followed from `sigma = 0` (where `u = 0`
//! is exact) to `sigma = 1` with adaptive steps.

use thiserror::Error;

use crate::grid::{FieldTag, ScalarField};
use crate::geometry::AmbientModel;
use crate::mce::{MceError, NewtonOptions, Operator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub dsigma_init: f64,
    pub dsigma_max: f64,
    pub dsigma_min: f64,
    /// Steps converging within this many Newton iterations enlarge `dsigma`.
    pub grow_below: usize,
    pub grow_factor: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            dsigma_init: 0.1,
            dsigma_max: 0.25,
            dsigma_min: 1e-4,
            grow_below: 5,
            grow_factor: 1.5,
            newton: NewtonOptions { max_iter: 25, ..NewtonOptions::default() },
        }
    }
}

/// One accepted state of the homotopy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyStep {
    pub sigma: f64,
    pub iterations: usize,
    pub residual: f64,
    pub sup_u: f64,
    pub sup_gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyState {
    pub sigma: f64,
    pub u: ScalarField,
    pub dsigma: f64,
    pub history: Vec<HomotopyStep>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error(transparent)]
    Solver(#[from] MceError),
    #[error("continuation stalled at sigma = {last_sigma} (step fell below {dsigma_min})")]
    Stall { last_sigma: f64, dsigma_min: f64, history: Vec<HomotopyStep> },
    #[error("uniqueness probe needs at least two initial guesses")]
    TooFewGuesses,
}

fn record(op: &Operator, u: &[f64], sigma: f64, iterations: usize, residual: f64) -> HomotopyStep {
    let sup_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_gradient = (0..u.len()).fold(0.0f64, |m, k| {
        let g = op.gradient(u, k);
        m.max(g[0].hypot(g[1]))
    });
    HomotopyStep { sigma, iterations, residual, sup_u, sup_gradient }
}

/// Follows the homotopy to `sigma = 1`. If the current iterate already solves
/// the `sigma = 1` problem the remaining range is crossed in one step.
pub fn continuity_solve(
    model: &AmbientModel,
    h: &ScalarField,
    phi: &ScalarField,
    opts: &ContinuationOptions,
) -> Result<HomotopyState, ContinuationError> {
    let grid = h.grid().clone();
    if phi.grid() != &grid {
        return Err(MceError::Incompatible("H and phi live on different grids".into()).into());
    }
    let op = Operator::new(model, grid.clone())?;
    let scaled = |v: &[f64], s: f64| v.iter().map(|x| s * x).collect::<Vec<_>>();
    let full_h = h.values();
    let full_phi = phi.values();

    let mut sigma = 0.0;
    let mut u = vec![0.0; grid.len()];
    let mut dsigma = opts.dsigma_init.clamp(opts.dsigma_min, opts.dsigma_max);
    let mut history = vec![record(&op, &u, 0.0, 1, 0.0)];
    let check = NewtonOptions { max_iter: 0, ..opts.newton };

    while sigma < 1.0 {
        // shortcut: is the current iterate already the sigma = 1 solution?
        if let Ok(done) = op.newton(full_h, full_phi, &u, &check) {
            history.push(record(&op, &done.u, 1.0, done.iterations, done.residual_norm));
            sigma = 1.0;
            u = done.u;
            break;
        }
        let target = (sigma + dsigma).min(1.0);
        match op.newton(&scaled(full_h, target), &scaled(full_phi, target), &u, &opts.newton) {
            Ok(out) => {
                history.push(record(&op, &out.u, target, out.iterations, out.residual_norm));
                if out.iterations <= opts.grow_below {
                    dsigma = (dsigma * opts.grow_factor).min(opts.dsigma_max);
                }
                sigma = target;
                u = out.u;
            }
            Err(MceError::NonConvergence { .. } | MceError::Divergence { .. } | MceError::LinearSolve(_)) => {
                dsigma *= 0.5;
                if dsigma < opts.dsigma_min {
                    return Err(ContinuationError::Stall { last_sigma: sigma, dsigma_min: opts.dsigma_min, history });
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    let u = ScalarField::new(grid, u, FieldTag::Height).map_err(MceError::from)?;
    Ok(HomotopyState { sigma, u, dsigma, history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub solutions: Vec<ScalarField>,
    pub max_difference: f64,
    /// Whether all solutions agree within `1e-8`.
    pub unique: bool,
}

/// Newton solves from each guess and the largest pairwise sup-distance
/// between the results.
pub fn uniqueness_probe(
    model: &AmbientModel,
    h: &ScalarField,
    phi: &ScalarField,
    guesses: &[ScalarField],
    opts: &NewtonOptions,
) -> Result<UniquenessReport, ContinuationError> {
    if guesses.len() < 2 {
        return Err(ContinuationError::TooFewGuesses);
    }
    let solutions = guesses
        .iter()
        .map(|g| crate::mce::newton_solve(model, h, phi, g, opts).map(|r| r.u))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_difference = 0.0f64;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            max_difference = max_difference.max(a.max_diff(b));
        }
    }
    Ok(UniquenessReport { solutions, max_difference, unique: max_difference <= 1e-8 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LeafMetric, LeafPoint, Shape, WarpingFunction};
    use crate::grid::Grid;
    use std::sync::Arc;

    fn flat() -> AmbientModel {
        AmbientModel::new(LeafMetric::euclidean_polar(2).unwrap(), WarpingFunction::unit())
    }

    #[test]
    fn trivial_problem_takes_one_step() {
        let g = Arc::new(Grid::radial(Shape::disc(1.0).unwrap(), 2, 16).unwrap());
        let zero = ScalarField::constant(g.clone(), 0.0, FieldTag::Height);
        let st = continuity_solve(&flat(), &zero, &zero, &ContinuationOptions::default()).unwrap();
        assert_eq!(st.sigma, 1.0);
        assert_eq!(st.history.len(), 2);
        assert_eq!(st.u.max_abs(), 0.0);
    }

    #[test]
    fn hemisphere_reaches_sigma_one() {
        let g = Arc::new(Grid::radial(Shape::disc(0.8).unwrap(), 2, 64).unwrap());
        let h = ScalarField::constant(g.clone(), -1.0, FieldTag::MeanCurvature);
        let zero = ScalarField::constant(g.clone(), 0.0, FieldTag::Height);
        let st = continuity_solve(&flat(), &h, &zero, &ContinuationOptions::default()).unwrap();
        let height = st.u.values()[0] - st.u.values()[g.len() - 1];
        let r0 = g.first_coords()[0];
        assert!((height - ((1.0 - r0 * r0).sqrt() - 0.6)).abs() < 5.0 * g.h() * g.h());
        assert!(st.history.iter().all(|s| s.iterations <= 8), "{:?}", st.history);
        assert!(st.history.windows(2).all(|w| w[1].sigma > w[0].sigma));
    }

    #[test]
    fn oversized_sphere_stalls() {
        let g = Arc::new(Grid::radial(Shape::disc(1.0).unwrap(), 2, 32).unwrap());
        let h = ScalarField::constant(g.clone(), -2.0, FieldTag::MeanCurvature);
        let zero = ScalarField::constant(g.clone(), 0.0, FieldTag::Height);
        match continuity_solve(&flat(), &h, &zero, &ContinuationOptions::default()) {
            Err(ContinuationError::Stall { last_sigma, history, .. }) => {
                assert!(last_sigma < 1.0);
                assert_eq!(history.last().unwrap().sigma, last_sigma);
            }
            other => panic!("expected a stall, got {other:?}"),
        }
    }

    #[test]
    fn probe_needs_two_guesses() {
        let g = Arc::new(Grid::radial(Shape::disc(1.0).unwrap(), 2, 8).unwrap());
        let zero = ScalarField::constant(g.clone(), 0.0, FieldTag::Height);
        let r = uniqueness_probe(&flat(), &zero, &zero, std::slice::from_ref(&zero), &NewtonOptions::default());
        assert_eq!(r, Err(ContinuationError::TooFewGuesses));
        let bump = ScalarField::sample(g.clone(), &|p: LeafPoint| 0.1 * (1.0 - p.a), FieldTag::Height);
        let r = uniqueness_probe(&flat(), &zero, &zero, &[zero.clone(), bump], &NewtonOptions::default()).unwrap();
        assert!(r.unique);
        assert!(r.max_difference <= 1e-8);
    }
}
