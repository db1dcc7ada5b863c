//! Reference solvers: method of characteristics, implicit finite
//! differences and a standalone power flow.

pub mod fdm;
pub mod moc;
pub mod newton;
pub mod powerflow;
pub mod stepper;

pub use fdm::{fdm_solve, FdmConfig, FdmScheme};
pub use moc::{moc_solve, MocConfig};
