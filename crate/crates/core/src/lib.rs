//! Dynamic energy flow simulation for integrated electricity and gas
//! systems: a differential-transformation solver with adaptive windows and
//! three classical reference solvers.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod discretization;
pub mod equations;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod scenario;
pub mod solver;
pub mod system;
pub mod taylor;
pub mod trajectory;

pub use error::{Error, Result};
