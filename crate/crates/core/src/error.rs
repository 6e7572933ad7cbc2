use std::path::PathBuf;

/// Errors produced by the numerical routines and the scenario runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Evaluation at a singular point (pole of a kernel, center of an inversion).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A quadrature or norm evaluation failed to settle under refinement.
    #[error("diverged: {0}")]
    Diverged(String),

    /// Shooting could not bracket the boundary value.
    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("iteration budget exceeded after {iterations} iterations (residual {residual:.3e})")]
    BudgetExceeded { iterations: usize, residual: f64 },

    #[error("energy unbounded below (watchdog tripped at {0:.3e})")]
    UnboundedBelow(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
