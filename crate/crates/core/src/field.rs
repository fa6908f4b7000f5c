//! Closed-form fields on the leaf: boundary data, prescribed curvature and
//! exact solutions all go through [`SmoothField`].

use std::fmt;
use std::str::FromStr;

use crate::functions::{ParseFnError, ScalarFn};
use crate::geometry::LeafPoint;

/// A smooth function on the leaf chart.
pub trait SmoothField: Send + Sync {
    fn value(&self, p: LeafPoint) -> f64;
}

impl<F> SmoothField for F
where
    F: Fn(LeafPoint) -> f64 + Send + Sync,
{
    fn value(&self, p: LeafPoint) -> f64 {
        self(p)
    }
}

/// One additive term of a [`FieldExpr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Constant(f64),
    /// `a cos(theta)`
    CosTheta(f64),
    /// `a r^2`
    R2(f64),
    /// `a r^2 cos(theta)`
    R2CosTheta(f64),
    /// `sqrt(R^2 - r^2)`
    SphereCap(f64),
    /// `a x`
    LinearX(f64),
    /// `a y`
    LinearY(f64),
    /// `a g(first coordinate)`
    Radial(f64, ScalarFn),
}

impl Term {
    fn value(&self, p: LeafPoint) -> f64 {
        let (a, b) = (p.a, p.b);
        match self {
            Term::Constant(c) => *c,
            Term::CosTheta(k) => k * b.cos(),
            Term::R2(k) => k * a * a,
            Term::R2CosTheta(k) => k * a * a * b.cos(),
            Term::SphereCap(radius) => (radius * radius - a * a).sqrt(),
            Term::LinearX(k) => k * a,
            Term::LinearY(k) => k * b,
            Term::Radial(k, g) => k * g.value(a),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(c) => write!(f, "{c}"),
            Term::CosTheta(k) => write!(f, "cos_theta:{k}"),
            Term::R2(k) => write!(f, "r2:{k}"),
            Term::R2CosTheta(k) => write!(f, "r2_cos_theta:{k}"),
            Term::SphereCap(r) => write!(f, "sphere_cap:{r}"),
            Term::LinearX(k) => write!(f, "linear_x:{k}"),
            Term::LinearY(k) => write!(f, "linear_y:{k}"),
            Term::Radial(k, g) => write!(f, "radial:{k}:{g}"),
        }
    }
}

/// A sum of named terms, e.g. `0.1 + cos_theta:0.05`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldExpr {
    pub terms: Vec<Term>,
}

impl FieldExpr {
    pub fn constant(c: f64) -> Self {
        FieldExpr { terms: vec![Term::Constant(c)] }
    }

    /// `Some(c)` when every term is constant.
    pub fn as_constant(&self) -> Option<f64> {
        self.terms.iter().try_fold(0.0, |acc, t| match t {
            Term::Constant(c) => Some(acc + c),
            _ => None,
        })
    }
}

impl SmoothField for FieldExpr {
    fn value(&self, p: LeafPoint) -> f64 {
        self.terms.iter().map(|t| t.value(p)).sum()
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl FromStr for FieldExpr {
    type Err = ParseFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        for raw in s.split('+') {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(ParseFnError::BadArgument(s.to_string()));
            }
            terms.push(parse_term(raw)?);
        }
        Ok(FieldExpr { terms })
    }
}

fn parse_term(raw: &str) -> Result<Term, ParseFnError> {
    if let Ok(c) = raw.parse::<f64>() {
        return Ok(Term::Constant(c));
    }
    let bad = || ParseFnError::BadArgument(raw.to_string());
    let (name, rest) = raw.split_once(':').ok_or_else(|| ParseFnError::Unknown(raw.to_string()))?;
    if name == "radial" {
        let (k, g) = rest.split_once(':').ok_or_else(bad)?;
        let k = k.trim().parse::<f64>().map_err(|_| bad())?;
        return Ok(Term::Radial(k, g.parse()?));
    }
    let k = rest.trim().parse::<f64>().map_err(|_| bad())?;
    Ok(match name {
        "constant" => Term::Constant(k),
        "cos_theta" => Term::CosTheta(k),
        "r2" => Term::R2(k),
        "r2_cos_theta" => Term::R2CosTheta(k),
        "sphere_cap" => Term::SphereCap(k),
        "linear_x" => Term::LinearX(k),
        "linear_y" => Term::LinearY(k),
        _ => return Err(ParseFnError::Unknown(raw.to_string())),
    })
}
