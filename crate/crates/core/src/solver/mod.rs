//! Differential-transformation solver: block assembly, the per-order
//! three-step solve, the window controller and the time loop.

pub mod blocks;
pub mod controller;
pub mod kmatrix;
pub mod oracle;
pub mod semidiscrete;
pub mod simulate;

pub use controller::{adapt_window, window_error, WindowControlConfig};
pub use simulate::{simulate, simulate_observed, DtConfig, WindowView};

#[cfg(test)]
mod tests;
