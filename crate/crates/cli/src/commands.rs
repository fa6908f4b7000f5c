//! The subcommands. Each returns the process outcome; files are written
//! before a failing outcome is reported so partial results survive.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use kgraph::barriers::{
    boundary_gradient_barrier, check_theorem_hypotheses, choose_barrier_constants, height_barrier_residuals,
    verify_height, HypothesisReport, Theorem,
};
use kgraph::battery::{convergence_csv, run_case, MmsCase};
use kgraph::continuation::{continuity_solve, ContinuationError, ContinuationOptions, HomotopyStep};
use kgraph::mce::{coefficients, gradient_diagnostic, newton_solve, NewtonOptions};
use kgraph::rotational::{graph_flux_check, integrate_cmc_sphere, serrin_bound_f};
use kgraph::{AmbientModel, Domain, FieldExpr, FieldTag, Grid, LeafPoint, ScalarField, Shape};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, num, verdict, KeyValues, Sink};

/// Flux identity tolerance, relative to `n int |H| rho`.
pub const FLUX_TOL: f64 = 1e-3;

#[derive(Debug)]
pub enum Outcome {
    Success,
    HypothesisFailure,
    SolverFailure(String),
    ConfigFailure(String),
    Io(String),
}

impl Outcome {
    pub fn code(&self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::HypothesisFailure => 1,
            Outcome::SolverFailure(_) => 2,
            Outcome::ConfigFailure(_) | Outcome::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for Outcome {
    fn from(e: ConfigError) -> Self {
        Outcome::ConfigFailure(e.to_string())
    }
}

impl From<std::io::Error> for Outcome {
    fn from(e: std::io::Error) -> Self {
        Outcome::Io(format!("cannot write output: {e}"))
    }
}

pub struct Invocation {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub require_hypotheses: bool,
}

impl Invocation {
    fn sink(&self) -> Result<Sink, Outcome> {
        let dir: &Path = self.out.as_deref().unwrap_or(&self.config.output.directory);
        Ok(Sink::new(dir, &self.config.output)?)
    }
}

/// Model, domain, curvature and grid of a solve-type config.
struct Problem {
    model: AmbientModel,
    domain: Domain,
    h_expr: FieldExpr,
    theorem: Theorem,
    grid: Arc<Grid>,
}

impl Problem {
    fn from_config(c: &RunConfig) -> Result<Problem, Outcome> {
        let model = c.model()?.build()?;
        let domain = c.domain()?.build();
        let problem = c.problem()?;
        model.check_domain(&domain).map_err(|e| Outcome::ConfigFailure(format!("model and domain disagree: {e}")))?;
        let grid = c
            .solver
            .spec()
            .build(domain.shape, model.dim())
            .map_err(|e| Outcome::ConfigFailure(format!("cannot build grid: {e}")))?;
        Ok(Problem { model, domain, h_expr: problem.h.clone(), theorem: problem.theorem, grid: Arc::new(grid) })
    }

    fn h(&self) -> ScalarField {
        ScalarField::sample(self.grid.clone(), &self.h_expr, FieldTag::MeanCurvature)
    }

    fn phi(&self) -> ScalarField {
        ScalarField::sample(self.grid.clone(), self.domain.boundary_data.as_ref(), FieldTag::Height)
    }

    fn hypotheses(&self, theorem: Theorem) -> Result<HypothesisReport, Outcome> {
        check_theorem_hypotheses(&self.model, &self.domain, &self.h_expr, theorem)
            .map_err(|e| Outcome::ConfigFailure(format!("cannot evaluate hypotheses: {e}")))
    }
}

struct Solved {
    u: ScalarField,
    history: Vec<HomotopyStep>,
}

/// Continuation or plain Newton per the config. On failure the history so far
/// comes back with the message.
fn solve(c: &RunConfig, p: &Problem, h: &ScalarField, phi: &ScalarField) -> Result<Solved, (Vec<HomotopyStep>, String)> {
    let newton = NewtonOptions { tol: c.solver.tol, max_iter: c.solver.max_iter, ..NewtonOptions::default() };
    if c.solver.homotopy {
        let opts = ContinuationOptions {
            dsigma_init: c.solver.dsigma,
            dsigma_max: ContinuationOptions::default().dsigma_max.max(c.solver.dsigma),
            newton,
            ..ContinuationOptions::default()
        };
        return match continuity_solve(&p.model, h, phi, &opts) {
            Ok(state) => Ok(Solved { u: state.u, history: state.history }),
            Err(ContinuationError::Stall { history, .. }) => {
                let last = history.last().map_or(0.0, |s| s.sigma);
                Err((history, format!("continuation stalled at sigma = {}", num(last))))
            }
            Err(e) => Err((Vec::new(), e.to_string())),
        };
    }
    let domain = &p.domain;
    let start = ScalarField::sample(p.grid.clone(), &|q: LeafPoint| domain.phi_extended(q), FieldTag::Height);
    match newton_solve(&p.model, h, phi, &start, &newton) {
        Ok(rep) => {
            let diag = gradient_diagnostic(&p.model, &rep.u, 1.0).map_err(|e| (Vec::new(), e.to_string()))?;
            let step = HomotopyStep {
                sigma: 1.0,
                iterations: rep.iterations,
                residual: rep.residual_norm,
                sup_u: rep.u.max_abs(),
                sup_gradient: diag.max_gradient,
            };
            Ok(Solved { u: rep.u, history: vec![step] })
        }
        Err(e) => Err((Vec::new(), e.to_string())),
    }
}

fn grid_lines(kv: &mut KeyValues, grid: &Grid) {
    let (m1, m2) = grid.cells();
    kv.text("grid", grid.kind().name()).text("m_first", m1).text("m_second", m2).text("nodes", grid.len()).num("h", grid.h());
}

/// Barrier constants, containment and boundary-gradient check.
fn barrier_report(p: &Problem, u: &ScalarField) -> KeyValues {
    let mut kv = KeyValues::new();
    let h: &FieldExpr = &p.h_expr;
    let params = match choose_barrier_constants(&p.model, &p.domain, h, p.grid.clone()) {
        Ok(params) => params,
        Err(e) => {
            kv.text("status", format!("unavailable ({e})"));
            return kv;
        }
    };
    kv.text("status", "constructed").num("c", params.c).num("a", params.a).num("epsilon", params.epsilon);
    let (inf_phi, sup_phi) = p.domain.phi_bounds();
    match height_barrier_residuals(&p.model, &p.domain, h, p.grid.clone(), &params) {
        Ok((up, low)) => {
            kv.num("max_upper_residual", up).num("min_lower_residual", low).check("supersolution", up < 0.0 && low > 0.0);
        }
        Err(e) => {
            kv.text("supersolution", format!("FAIL ({e})"));
        }
    }
    match verify_height(u, &p.domain, sup_phi, inf_phi, &params) {
        Ok(check) => {
            kv.num("height_margin", check.margin).check("height_contained", check.contained);
        }
        Err(e) => {
            kv.text("height_contained", format!("FAIL ({e})"));
        }
    }
    match boundary_gradient_barrier(&p.model, &p.domain, u, h, &params) {
        Ok(g) => {
            let side = |s: kgraph::barriers::GradientBarrierSide| match (s.precondition, s.k) {
                (false, _) => "precondition-fails".to_string(),
                (true, None) => "not-found".to_string(),
                (true, Some(k)) => num(k),
            };
            kv.text("gradient_upper_k", side(g.upper))
                .text("gradient_lower_k", side(g.lower))
                .num("sup_boundary_gradient", g.sup_boundary_gradient)
                .num("sup_data_gradient", g.sup_data_gradient);
            match (g.psi_d1_at_zero, g.bound_holds()) {
                (Some(psi), Some(holds)) => {
                    kv.num("psi_d1_at_zero", psi).check("gradient_bound", holds);
                }
                _ => {
                    kv.text("gradient_bound", "unavailable");
                }
            }
        }
        Err(e) => {
            kv.text("gradient_bound", format!("unavailable ({e})"));
        }
    }
    kv
}

pub fn run_solve(inv: &Invocation) -> Result<Outcome, Outcome> {
    let c = &inv.config;
    let p = Problem::from_config(c)?;
    let mut sink = inv.sink()?;
    let hyp = p.hypotheses(p.theorem)?;
    sink.write("hypotheses", "hypotheses.txt", &hyp.to_string())?;
    if inv.require_hypotheses && !hyp.verdict {
        let mut report = KeyValues::new();
        report.text("command", "solve").text("theorem", p.theorem.id()).check("hypotheses", false).text("status", "not-solved");
        sink.write("report", "report.txt", &report.render())?;
        return Ok(Outcome::HypothesisFailure);
    }

    let (h, phi) = (p.h(), p.phi());
    let mut report = KeyValues::new();
    report.text("command", "solve");
    grid_lines(&mut report, &p.grid);
    report.text("theorem", p.theorem.id()).check("hypotheses", hyp.verdict).text("homotopy", if c.solver.homotopy { "on" } else { "off" });

    let solved = match solve(c, &p, &h, &phi) {
        Ok(s) => s,
        Err((history, msg)) => {
            sink.write("homotopy", "homotopy.csv", &output::homotopy_csv(&history))?;
            let last = history.last().map_or(0.0, |s| s.sigma);
            report.num("sigma", last).check("converged", false).text("status", &msg);
            sink.write("report", "report.txt", &report.render())?;
            return Ok(Outcome::SolverFailure(msg));
        }
    };
    let u = &solved.u;
    sink.write("solution", "solution.kgraph", &output::solution_file(u, p.model.dim()))?;
    sink.write("homotopy", "homotopy.csv", &output::homotopy_csv(&solved.history))?;

    let coeffs = coefficients(&p.model, u).map_err(|e| Outcome::SolverFailure(e.to_string()))?;
    let mut ck = output::coefficients_summary(&coeffs);
    let diag = gradient_diagnostic(&p.model, u, 1.0).map_err(|e| Outcome::SolverFailure(e.to_string()))?;
    ck.num("sup_u", u.max_abs()).num("sup_gradient", diag.max_gradient);
    sink.write("coefficients", "coefficients.txt", &ck.render())?;

    let barrier = barrier_report(&p, u);
    sink.write("barrier", "barrier.txt", &barrier.render())?;

    let flux = graph_flux_check(&p.model, u, &h).map_err(|e| Outcome::SolverFailure(e.to_string()))?;
    sink.write("flux", "flux.txt", &output::flux_summary(&flux, FLUX_TOL).render())?;

    let last = solved.history.last().copied();
    let iterations: usize = solved.history.iter().map(|s| s.iterations).sum();
    report
        .num("sigma", 1.0)
        .text("steps", solved.history.len())
        .text("newton_iterations", iterations)
        .num("residual", last.map_or(0.0, |s| s.residual))
        .num("sup_u", u.max_abs())
        .num("sup_gradient", diag.max_gradient)
        .check("converged", true)
        .check("flux", flux.scaled_residual() <= FLUX_TOL);
    if let Some(k) = centre_minus_boundary(u) {
        report.num("centre_minus_boundary", k);
    }
    sink.write("report", "report.txt", &report.render())?;
    Ok(Outcome::Success)
}

/// `u(centre) - mean over boundary nodes` on grids with a pole.
fn centre_minus_boundary(u: &ScalarField) -> Option<f64> {
    let grid = u.grid();
    if !grid.has_pole() {
        return None;
    }
    let b = grid.boundary_nodes();
    let mean = b.iter().map(|&k| u.values()[k]).sum::<f64>() / b.len() as f64;
    Some(u.values()[0] - mean)
}

pub fn run_check(inv: &Invocation) -> Result<Outcome, Outcome> {
    let p = Problem::from_config(&inv.config)?;
    let mut sink = inv.sink()?;
    let hyp = p.hypotheses(p.theorem)?;
    let text = hyp.to_string();
    sink.write("hypotheses", "hypotheses.txt", &text)?;
    print!("{text}");
    Ok(if hyp.verdict { Outcome::Success } else { Outcome::HypothesisFailure })
}

pub fn run_flux(inv: &Invocation) -> Result<Outcome, Outcome> {
    let c = &inv.config;
    let p = Problem::from_config(c)?;
    let mut sink = inv.sink()?;
    let (h, phi) = (p.h(), p.phi());
    let solved = match solve(c, &p, &h, &phi) {
        Ok(s) => s,
        Err((history, msg)) => {
            sink.write("homotopy", "homotopy.csv", &output::homotopy_csv(&history))?;
            return Ok(Outcome::SolverFailure(msg));
        }
    };
    let flux = graph_flux_check(&p.model, &solved.u, &h).map_err(|e| Outcome::SolverFailure(e.to_string()))?;
    let mut kv = KeyValues::new();
    grid_lines(&mut kv, &p.grid);
    let text = kv.render() + &output::flux_summary(&flux, FLUX_TOL).render();
    sink.write("flux", "flux.txt", &text)?;
    print!("{text}");
    Ok(Outcome::Success)
}

pub fn run_rotational(inv: &Invocation) -> Result<Outcome, Outcome> {
    let c = &inv.config;
    let model = c.model()?.build()?;
    let rot = c.rotational.as_ref().ok_or(ConfigError::MissingSection("rotational"))?;
    let r0 = rot.r0.or_else(|| match c.domain.as_ref().map(|d| d.shape) {
        Some(Shape::Disc { r0 }) => Some(r0),
        _ => None,
    });
    let mut sink = inv.sink()?;
    let mut kv = KeyValues::new();
    kv.text("command", "rotational").text("n", model.dim()).num("h0", rot.h0);
    if let Some(r0) = r0 {
        let f = serrin_bound_f(&model, r0).map_err(|e| Outcome::ConfigFailure(e.to_string()))?;
        kv.num("r0", r0).num("serrin_f", f).check("rotational_bound", model.dim() as f64 * rot.h0.abs() <= f + 1e-12);
    }
    let outcome = match integrate_cmc_sphere(&model, rot.h0) {
        Ok(curve) => {
            sink.write("profile", "profile.csv", &output::profile_csv(&curve))?;
            kv.text("samples", curve.len())
                .num("r_max", curve.r_max)
                .num("s_center", curve.s_center)
                .num("flux_constant", curve.flux_constant)
                .num("max_flux_residual", curve.max_flux_residual())
                .num("arc_length_defect", curve.arc_length_defect(&model))
                .check("closed", true);
            Outcome::Success
        }
        Err(e) => {
            kv.check("closed", false).text("status", e.to_string());
            let config_problem = !matches!(e, kgraph::rotational::RotationalError::Unbounded { .. } | kgraph::rotational::RotationalError::StepCollapse(_));
            if config_problem {
                Outcome::ConfigFailure(e.to_string())
            } else {
                Outcome::SolverFailure(e.to_string())
            }
        }
    };
    sink.write("report", "report.txt", &kv.render())?;
    Ok(outcome)
}

pub fn run_mms(inv: &Invocation) -> Result<Outcome, Outcome> {
    let c = &inv.config;
    let mms = c.mms.as_ref().ok_or(ConfigError::MissingSection("mms"))?;
    let mut case = MmsCase::named(&mms.case).map_err(|e| Outcome::ConfigFailure(e.to_string()))?;
    if !mms.grids.is_empty() {
        let base = case.grids[0];
        case = case.clone().with_grids(mms.grids.iter().map(|&m| base.with_cells(m)).collect());
    }
    let mut sink = inv.sink()?;
    let rows = match run_case(&case) {
        Ok(rows) => rows,
        Err(e) => return Ok(Outcome::SolverFailure(e.to_string())),
    };
    let csv = convergence_csv(&rows);
    sink.write("mms", "mms.csv", &csv)?;
    let mut kv = KeyValues::new();
    kv.text("command", "mms").text("case", case.name).text("grids", rows.len());
    for (i, r) in rows.iter().enumerate() {
        kv.num(&format!("h_{i}"), r.h)
            .num(&format!("max_error_{i}"), r.max_error)
            .text(&format!("iterations_{i}"), r.iterations)
            .num(&format!("flux_scaled_residual_{i}"), r.flux.scaled_residual());
    }
    if let Some(o) = rows.last().and_then(|r| r.order) {
        kv.num("final_order", o).text("order_in_range", verdict((1.8..=2.2).contains(&o)));
    }
    sink.write("report", "report.txt", &kv.render())?;
    print!("{csv}");
    Ok(Outcome::Success)
}
