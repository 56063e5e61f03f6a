//! Desk-scale circle method computations for the intersection `X: C = Q = 0`
//! of an integral cubic form `C` and quadratic form `Q` in `n` variables.

// `!(x > 0.0)` guards reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archimedean;
pub mod arcs;
pub mod arith;
pub mod cli;
pub mod counting;
pub mod error;
pub mod expsums;
pub mod forms;
pub mod lattice;
pub mod localdens;
pub mod quad;
pub mod reduce;
pub mod weightfn;
pub mod weyldiag;

pub use error::{Error, Result};
pub use expsums::{RationalApprox, ThetaHeight};
pub use forms::{CubicForm, FormPair, QuadraticForm};
pub use lattice::IntBox;
pub use num_complex::Complex64;
pub use weightfn::Weight;
