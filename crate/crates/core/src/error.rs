use thiserror::Error;

use crate::system::Diagnostic;

/// Errors surfaced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("validation failed with {} diagnostic(s): {}", .0.len(), summarize(.0))]
    Validation(Vec<Diagnostic>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: zero pivot at step {pivot}")]
    Singular { pivot: usize },

    #[error("newton did not converge after {iterations} iterations (residual {residual:.3e}){context}")]
    Divergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("window step fell below the floor at t = {time:.6} s (dt = {dt:.3e} s)")]
    StepTooSmall { time: f64, dt: f64 },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("[{}] {}: {}", d.code, d.location, d.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Structural(_) | Error::Parse { .. } | Error::Range(_) => 2,
            Error::Domain(_) | Error::Singular { .. } | Error::Divergence { .. } | Error::StepTooSmall { .. } => 3,
            Error::Io { .. } => 4,
        }
    }

    pub(crate) fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Divergence {
                iterations,
                residual,
                context,
            } => Error::Divergence {
                iterations,
                residual,
                context: format!("{context} {}", ctx.into()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
