//! Built-in one-variable functions with analytic first and second derivatives.
//!
//! The leaf profile `xi(r)` and the warping function `rho` are drawn from this
//! registry, so every geometric quantity downstream is exactly evaluable.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseFnError {
    #[error("unknown function `{0}`")]
    Unknown(String),
    #[error("bad argument in `{0}`")]
    BadArgument(String),
}

/// A smooth real function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    Identity,
    Sinh,
    Cosh,
    Sin,
    /// `c[0] + c[1] t + c[2] t^2 + ...`
    Polynomial(Vec<f64>),
}

impl ScalarFn {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Identity => t,
            ScalarFn::Sinh => t.sinh(),
            ScalarFn::Cosh => t.cosh(),
            ScalarFn::Sin => t.sin(),
            ScalarFn::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * t + a),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            ScalarFn::Constant(_) => 0.0,
            ScalarFn::Identity => 1.0,
            ScalarFn::Sinh => t.cosh(),
            ScalarFn::Cosh => t.sinh(),
            ScalarFn::Sin => t.cos(),
            ScalarFn::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * t + k as f64 * a),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            ScalarFn::Constant(_) | ScalarFn::Identity => 0.0,
            ScalarFn::Sinh => t.sinh(),
            ScalarFn::Cosh => t.cosh(),
            ScalarFn::Sin => -t.sin(),
            ScalarFn::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * t + (k * (k - 1)) as f64 * a),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ScalarFn::Constant(_) => true,
            ScalarFn::Polynomial(c) => c.iter().skip(1).all(|&a| a == 0.0),
            _ => false,
        }
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "constant:{c}"),
            ScalarFn::Identity => write!(f, "identity"),
            ScalarFn::Sinh => write!(f, "sinh"),
            ScalarFn::Cosh => write!(f, "cosh"),
            ScalarFn::Sin => write!(f, "sin"),
            ScalarFn::Polynomial(c) => {
                let coeffs: Vec<String> = c.iter().map(|a| a.to_string()).collect();
                write!(f, "polynomial:{}", coeffs.join(","))
            }
        }
    }
}

/// Accepts `identity`, `sinh`, `cosh`, `sin`, `constant:<c>` (or a bare
/// number) and `polynomial:<c0>,<c1>,...`.
impl FromStr for ScalarFn {
    type Err = ParseFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let number = |a: &str| a.parse::<f64>().map_err(|_| ParseFnError::BadArgument(s.to_string()));
        match (name, arg) {
            ("identity", None) => Ok(ScalarFn::Identity),
            ("sinh", None) => Ok(ScalarFn::Sinh),
            ("cosh", None) => Ok(ScalarFn::Cosh),
            ("sin", None) => Ok(ScalarFn::Sin),
            ("constant", Some(a)) => Ok(ScalarFn::Constant(number(a)?)),
            ("polynomial", Some(a)) => {
                let coeffs = a.split(',').map(|c| number(c.trim())).collect::<Result<Vec<_>, _>>()?;
                if coeffs.is_empty() {
                    return Err(ParseFnError::BadArgument(s.to_string()));
                }
                Ok(ScalarFn::Polynomial(coeffs))
            }
            (other, None) => other
                .parse::<f64>()
                .map(ScalarFn::Constant)
                .map_err(|_| ParseFnError::Unknown(s.to_string())),
            _ => Err(ParseFnError::Unknown(s.to_string())),
        }
    }
}
