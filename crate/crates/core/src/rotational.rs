//! Rotationally invariant hypersurfaces in `P x_rho R` over a rotational leaf
//! `dr^2 + xi(r)^2 dtheta^2`, and the flux identity for graphs.
//!
//! A profile `(s(u), r(u))` parametrized by arc length in the orbit metric
//! `rho^2 ds^2 + dr^2` has constant mean curvature `H0` iff
//! `n H0 I(r) + s' rho^2 xi^{n-1} = c` with `I(r) = int_0^r rho xi^{n-1}`.
//! Compact spheres have `c = 0`.

use thiserror::Error;

use crate::geometry::{unit_sphere_area, AmbientModel, LeafMetric};
use crate::grid::ScalarField;
use crate::mce::{MceError, Operator};
use crate::quadrature::integrate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationalError {
    #[error("rotational computations need a rotational leaf")]
    NotRotational,
    #[error("radius {0} must be positive")]
    BadRadius(f64),
    #[error("mean curvature must be nonzero for a compact profile")]
    ZeroCurvature,
    #[error("profile does not close up: no turning radius found (reached r = {r}, u = {u})")]
    Unbounded { r: f64, u: f64 },
    #[error("integrator step collapsed at u = {0}")]
    StepCollapse(f64),
    #[error(transparent)]
    Solver(#[from] MceError),
}

/// `xi`, `rho` and the dimension of a rotational ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationalModel {
    model: AmbientModel,
    n: usize,
}

impl RotationalModel {
    pub fn new(model: &AmbientModel) -> Result<Self, RotationalError> {
        match model.leaf {
            LeafMetric::RotSym { dim, .. } => Ok(RotationalModel { model: model.clone(), n: dim }),
            LeafMetric::CartesianFlat => Err(RotationalError::NotRotational),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `rho xi^{n-1}` and its derivative.
    fn density(&self, r: f64) -> (f64, f64) {
        let m = &self.model;
        let n = self.n as i32;
        let (rho, rho1) = (m.warp.rho(r), m.warp.rho_d1(r));
        let (xi, xi1) = (m.xi(r), m.xi_d1(r));
        let p = xi.powi(n - 1);
        let dp = if n >= 2 { (n - 1) as f64 * xi.powi(n - 2) * xi1 } else { 0.0 };
        (rho * p, rho1 * p + rho * dp)
    }

    fn rho(&self, r: f64) -> f64 {
        self.model.warp.rho(r)
    }

    /// `I(r) = int_0^r rho xi^{n-1}` to absolute tolerance `1e-12`.
    pub fn momentum_integral(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        integrate(|t| self.density(t).0, 0.0, r, 1e-12)
    }

    /// `F(r0) = rho(r0) xi^{n-1}(r0) / I(r0)`.
    pub fn serrin_bound(&self, r0: f64) -> Result<f64, RotationalError> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(RotationalError::BadRadius(r0));
        }
        Ok(self.density(r0).0 / self.momentum_integral(r0))
    }
}

pub fn momentum_integral(model: &AmbientModel, r: f64) -> Result<f64, RotationalError> {
    Ok(RotationalModel::new(model)?.momentum_integral(r))
}

pub fn serrin_bound_f(model: &AmbientModel, r0: f64) -> Result<f64, RotationalError> {
    RotationalModel::new(model)?.serrin_bound(r0)
}

/// Sampled arc-length profile of a rotational CMC hypersurface.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub sdot: Vec<f64>,
    pub rdot: Vec<f64>,
    /// `n H0 I(r) + s' rho^2 xi^{n-1} - c` per sample, with `I` by quadrature.
    pub flux_residual: Vec<f64>,
    pub h0: f64,
    /// Reduced flux constant `c / omega_n`.
    pub flux_constant: f64,
    pub r_max: f64,
    /// `s` at the turning radius (the plane of symmetry).
    pub s_center: f64,
}

impl ProfileCurve {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `max |rho^2 s'^2 + r'^2 - 1|`.
    pub fn arc_length_defect(&self, model: &AmbientModel) -> f64 {
        (0..self.len())
            .map(|k| {
                let rho = model.warp.rho(self.r[k]);
                (rho * rho * self.sdot[k] * self.sdot[k] + self.rdot[k] * self.rdot[k] - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_flux_residual(&self) -> f64 {
        self.flux_residual.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

type State = [f64; 4];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince 5(4) step of an autonomous system: fifth-order result
/// and error estimate.
fn dp_step(rhs: &impl Fn(&State) -> State, y: &State, h: f64) -> (State, State) {
    let mut k = [[0.0; 4]; 7];
    for stage in 0..7 {
        let mut ys = *y;
        for (prev, kp) in k.iter().enumerate().take(stage) {
            for i in 0..4 {
                ys[i] += h * A[stage][prev] * kp[i];
            }
        }
        k[stage] = rhs(&ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; 4];
    for i in 0..4 {
        for (stage, ks) in k.iter().enumerate() {
            let b5 = if stage < 6 { A[6][stage] } else { 0.0 };
            y5[i] += h * b5 * ks[i];
            err[i] += h * (b5 - B4[stage]) * ks[i];
        }
    }
    (y5, err)
}

/// Integrates the compact (`c = 0`) CMC profile from the pole to the turning
/// radius and completes it by reflection.
///
/// The profile is written in angle form `rho s' = cos a`, `r' = sin a`, where
/// the first integral gives `cos a = q(r) = -n H0 I(r) / (rho xi^{n-1})` and
/// hence `a' = -q'(r)`. This stays smooth through the turning point `a = 0`.
/// Positive `H0` is handled by reflecting `s`.
pub fn integrate_cmc_sphere(model: &AmbientModel, h0: f64) -> Result<ProfileCurve, RotationalError> {
    let rm = RotationalModel::new(model)?;
    if h0 == 0.0 || !h0.is_finite() {
        return Err(RotationalError::ZeroCurvature);
    }
    let orientation = if h0 < 0.0 { 1.0 } else { -1.0 };
    let k = rm.n as f64 * h0.abs();
    let q = |r: f64, i: f64| k * i / rm.density(r).0;
    let rhs = |y: &State| -> State {
        let (r, a, i) = (y[1], y[2], y[3]);
        let (p, dp) = rm.density(r);
        let dq = k * (1.0 - i * dp / (p * p));
        [a.cos() / rm.rho(r), a.sin(), -dq, p * a.sin()]
    };

    // series start a short distance from the pole
    const R_START: f64 = 1e-3;
    let i0 = rm.momentum_integral(R_START);
    let a0 = q(R_START, i0).min(1.0).acos();
    let hh = k / rm.n as f64;
    let u0 = R_START + hh * hh * R_START.powi(3) / 6.0;
    let s0 = hh * u0 * u0 / (2.0 * rm.rho(0.0));
    let mut y: State = [s0, R_START, a0, i0];
    let mut u = u0;

    let mut samples: Vec<(f64, State)> = vec![(0.0, [0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0]), (u, y)];
    let (atol, rtol) = (1e-13, 1e-12);
    let mut h = 1e-3;
    loop {
        if y[1] > 20.0 || u > 200.0 {
            return Err(RotationalError::Unbounded { r: y[1], u });
        }
        if h < 1e-14 {
            return Err(RotationalError::StepCollapse(u));
        }
        let (y_new, err) = dp_step(&rhs, &y, h);
        let scale = |i: usize| atol + rtol * y[i].abs().max(y_new[i].abs());
        let e = (0..4).map(|i| (err[i] / scale(i)).abs()).fold(0.0, f64::max);
        if !e.is_finite() || e > 1.0 {
            h *= if e.is_finite() { (0.9 * e.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            continue;
        }
        if y_new[2] <= 0.0 {
            // secant on the step length for the turning point a = 0
            let (mut h_lo, mut a_lo, mut h_hi, mut a_hi) = (0.0, y[2], h, y_new[2]);
            let mut turn = y_new;
            let mut h_turn = h;
            for _ in 0..60 {
                let ht = h_lo - a_lo * (h_hi - h_lo) / (a_hi - a_lo);
                let (yt, _) = dp_step(&rhs, &y, ht);
                turn = yt;
                h_turn = ht;
                if yt[2].abs() < 1e-15 {
                    break;
                }
                if yt[2] > 0.0 {
                    h_lo = ht;
                    a_lo = yt[2];
                } else {
                    h_hi = ht;
                    a_hi = yt[2];
                }
                if (h_hi - h_lo).abs() < 1e-16 {
                    break;
                }
            }
            turn[2] = 0.0;
            u += h_turn;
            samples.push((u, turn));
            break;
        }
        u += h;
        y = y_new;
        samples.push((u, y));
        h *= (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }

    let (u_turn, turn) = *samples.last().unwrap();
    let (s_center, r_max) = (turn[0], turn[1]);
    let mut full: Vec<(f64, f64, f64, f64, f64)> = samples
        .iter()
        .map(|&(uk, yk)| (uk, yk[0], yk[1], yk[2].cos() / rm.rho(yk[1]), yk[2].sin()))
        .collect();
    // mirror image across the plane s = s_center
    let upper: Vec<_> = samples[..samples.len() - 1]
        .iter()
        .rev()
        .map(|&(uk, yk)| (2.0 * u_turn - uk, 2.0 * s_center - yk[0], yk[1], yk[2].cos() / rm.rho(yk[1]), -yk[2].sin()))
        .collect();
    full.extend(upper);

    let n = rm.n as f64;
    let signed_h0 = h0;
    let mut curve = ProfileCurve {
        u: Vec::with_capacity(full.len()),
        s: Vec::with_capacity(full.len()),
        r: Vec::with_capacity(full.len()),
        sdot: Vec::with_capacity(full.len()),
        rdot: Vec::with_capacity(full.len()),
        flux_residual: Vec::with_capacity(full.len()),
        h0: signed_h0,
        flux_constant: 0.0,
        r_max,
        s_center: orientation * s_center,
    };
    for (uk, sk, rk, sd, rd) in full {
        let (s, sd) = (orientation * sk, orientation * sd);
        let rho = rm.rho(rk);
        let flux = n * signed_h0 * rm.momentum_integral(rk) + sd * rho * rho * rm.model.volume_density(rk);
        curve.u.push(uk);
        curve.s.push(s);
        curve.r.push(rk);
        curve.sdot.push(sd);
        curve.rdot.push(rd);
        curve.flux_residual.push(flux);
    }
    Ok(curve)
}

/// Both sides of the flux identity `n int_Omega H rho = int_Gamma rho <grad u, eta_out> / W`
/// for a discrete graph, and their relative mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
    pub absolute_residual: f64,
    /// `n int |H| rho`, the size of the flux through the graph.
    pub scale: f64,
}

impl FluxCheck {
    /// Mismatch relative to `scale`; meaningful also when both sides vanish
    /// by symmetry, where `relative_residual` is not.
    pub fn scaled_residual(&self) -> f64 {
        self.absolute_residual / (self.scale + 1e-30)
    }
}

/// `lhs` uses the composite cell rule over all dual cells, `rhs` the boundary
/// rule with second-order one-sided normal derivatives.
pub fn graph_flux_check(model: &AmbientModel, u: &ScalarField, h: &ScalarField) -> Result<FluxCheck, RotationalError> {
    if u.grid() != h.grid() {
        return Err(MceError::Incompatible("u and H live on different grids".into()).into());
    }
    let op = Operator::new(model, u.grid().clone())?;
    let grid = u.grid();
    let sphere = match grid.kind() {
        crate::grid::GridKind::Radial => unit_sphere_area(grid.dim() - 1),
        _ => 1.0,
    };
    let n = model.dim() as f64;
    let lhs = sphere * n * (0..grid.len()).map(|k| op.cell_measure(k) * h.values()[k]).sum::<f64>();
    let scale = sphere * n * (0..grid.len()).map(|k| op.cell_measure(k) * h.values()[k].abs()).sum::<f64>();
    let rhs = sphere * op.boundary_flux(u.values());
    let absolute_residual = (lhs - rhs).abs();
    Ok(FluxCheck {
        lhs,
        rhs,
        relative_residual: absolute_residual / (lhs.abs() + rhs.abs() + 1e-30),
        absolute_residual,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::ScalarFn;
    use crate::geometry::WarpingFunction;
    use approx::assert_relative_eq;

    fn model(xi: ScalarFn, rho: ScalarFn, n: usize) -> AmbientModel {
        AmbientModel::new(LeafMetric::rotsym(xi, n).unwrap(), WarpingFunction::new(rho))
    }

    #[test]
    fn momentum_integral_examples() {
        let flat = model(ScalarFn::Identity, ScalarFn::Constant(1.0), 2);
        assert_eq!(momentum_integral(&flat, 0.0).unwrap(), 0.0);
        assert_relative_eq!(momentum_integral(&flat, 2.0).unwrap(), 2.0, epsilon = 1e-13);
        let hyp = model(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2);
        assert_relative_eq!(momentum_integral(&hyp, 1.0).unwrap(), 1f64.cosh() - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn serrin_bound_examples() {
        let flat = model(ScalarFn::Identity, ScalarFn::Constant(1.0), 2);
        assert_relative_eq!(serrin_bound_f(&flat, 1.0).unwrap(), 2.0, epsilon = 1e-12);
        let hyp = model(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2);
        assert_relative_eq!(serrin_bound_f(&hyp, 2.0).unwrap(), 1.0 / 1f64.tanh(), epsilon = 1e-12);
        assert!((serrin_bound_f(&hyp, 1e-4).unwrap() * 1e-4 - 2.0).abs() < 1e-3);
        assert!(serrin_bound_f(&flat, 0.0).is_err());
        let cart = AmbientModel::new(LeafMetric::CartesianFlat, WarpingFunction::unit());
        assert_eq!(serrin_bound_f(&cart, 1.0), Err(RotationalError::NotRotational));
    }

    #[test]
    fn euclidean_sphere_is_a_circle() {
        let flat = model(ScalarFn::Identity, ScalarFn::Constant(1.0), 2);
        let c = integrate_cmc_sphere(&flat, -1.0).unwrap();
        assert!((c.r_max - 1.0).abs() < 1e-9);
        let dev = (0..c.len()).map(|k| ((c.s[k] - c.s_center).powi(2) + c.r[k] * c.r[k] - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-8, "deviation {dev}");
        assert!(c.max_flux_residual() < 1e-8);
        assert!(c.arc_length_defect(&flat) < 1e-10);
        // the reflected request traces the mirror image
        let m = integrate_cmc_sphere(&flat, 1.0).unwrap();
        assert_relative_eq!(m.s[5], -c.s[5], epsilon = 1e-15);
        assert!(m.max_flux_residual() < 1e-8);
    }

    #[test]
    fn three_dimensional_sphere() {
        let flat = model(ScalarFn::Identity, ScalarFn::Constant(1.0), 3);
        let c = integrate_cmc_sphere(&flat, -0.5).unwrap();
        assert!((c.r_max - 2.0).abs() < 1e-8);
        assert!(c.max_flux_residual() < 1e-8);
    }

    #[test]
    fn profile_without_turning_point_is_unbounded() {
        // on H^2 x R, F decreases to 1, so n |H0| = 0.8 never closes up
        let hyp = model(ScalarFn::Sinh, ScalarFn::Constant(1.0), 2);
        assert!(matches!(integrate_cmc_sphere(&hyp, -0.4), Err(RotationalError::Unbounded { .. })));
        assert_eq!(integrate_cmc_sphere(&hyp, 0.0), Err(RotationalError::ZeroCurvature));
    }
}
