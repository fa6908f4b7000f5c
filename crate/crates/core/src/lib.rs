//! Prescribed-mean-curvature Killing graphs in warped products
//! `M = P x_rho R`: geometry of the ambient space, a finite-volume Newton
//! solver for the Dirichlet problem, continuation in the data, barrier
//! constructions, rotational CMC profiles and a manufactured-solution
//! verification harness.

pub mod barriers;
pub mod battery;
pub mod continuation;
pub mod field;
pub mod functions;
pub mod geometry;
pub mod grid;
pub mod mce;
pub mod quadrature;
pub mod rotational;

pub use field::{FieldExpr, SmoothField};
pub use functions::ScalarFn;
pub use geometry::{AmbientModel, Domain, LeafMetric, LeafPoint, Shape, WarpingFunction};
pub use grid::{FieldTag, Grid, GridKind, ScalarField};
