//! Manufactured curvature: the `H` for which a closed-form `u` solves the
//! equation exactly.

use std::sync::Arc;

use crate::field::SmoothField;
use crate::geometry::{AmbientModel, LeafMetric, LeafPoint};

use super::operator::expanded_operator;

/// Fourth-order central first and second differences of `g` at `x`.
fn diff4(g: impl Fn(f64) -> f64, x: f64, d: f64) -> (f64, f64) {
    let (p1, p2, m1, m2) = (g(x + d), g(x + 2.0 * d), g(x - d), g(x - 2.0 * d));
    let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * d);
    let d2 = (-p2 + 16.0 * p1 - 30.0 * g(x) + 16.0 * m1 - m2) / (12.0 * d * d);
    (d1, d2)
}

/// Gradient and covariant Hessian of a closed-form function, in the chart's
/// orthonormal frame.
pub trait Jet: Send + Sync {
    fn jet(&self, p: LeafPoint) -> ([f64; 2], [[f64; 2]; 2]);
}

/// `H = (a^{ij} u_{i;j} + b) / n` for a closed-form `u`.
///
/// Derivatives come from fourth-order finite differences with step
/// `min(1e-3, r/4)` in `r` (steps never cross the pole) and `1e-3` otherwise.
/// On rotational leaves of dimension `n >= 3` the function must be radial.
#[derive(Clone)]
pub struct ManufacturedH {
    model: AmbientModel,
    u: Arc<dyn SmoothField>,
}

impl ManufacturedH {
    pub fn new(model: &AmbientModel, u: Arc<dyn SmoothField>) -> Self {
        ManufacturedH { model: model.clone(), u }
    }

    fn derivatives(&self, p: LeafPoint) -> [f64; 5] {
        let u = |a: f64, b: f64| self.u.value(LeafPoint::new(a, b));
        let da = if self.model.leaf.is_rotsym() { (p.a / 4.0).min(1e-3) } else { 1e-3 };
        let db = 1e-3;
        let (ua, uaa) = diff4(|a| u(a, p.b), p.a, da);
        let (ub, ubb) = diff4(|b| u(p.a, b), p.b, db);
        let uab = diff4(|a| diff4(|b| u(a, b), p.b, db).0, p.a, da).0;
        [ua, ub, uaa, ubb, uab]
    }
}

impl Jet for ManufacturedH {
    fn jet(&self, p: LeafPoint) -> ([f64; 2], [[f64; 2]; 2]) {
        let [ua, ub, uaa, ubb, uab] = self.derivatives(p);
        match &self.model.leaf {
            LeafMetric::RotSym { xi, .. } => {
                let (x, c) = (xi.value(p.a), xi.d1(p.a) / xi.value(p.a));
                let cross = (uab - c * ub) / x;
                ([ua, ub / x], [[uaa, cross], [cross, ubb / (x * x) + c * ua]])
            }
            LeafMetric::CartesianFlat => ([ua, ub], [[uaa, uab], [uab, ubb]]),
        }
    }
}

impl SmoothField for ManufacturedH {
    fn value(&self, p: LeafPoint) -> f64 {
        let n = self.model.dim() as f64;
        let (grad, hess) = self.jet(p);
        // radial functions on higher-dimensional leaves: the remaining
        // tangential directions repeat the (xi'/xi) u_r entry
        let extra = (n - 2.0) * hess[1][1];
        let op = expanded_operator(self.model.f(p), self.model.drift_field(p), grad, hess, extra);
        op / n
    }
}

pub fn manufactured_h(model: &AmbientModel, u: Arc<dyn SmoothField>) -> ManufacturedH {
    ManufacturedH::new(model, u)
}
