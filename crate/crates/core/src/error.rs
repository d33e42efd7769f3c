//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or structural argument violates its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix not positive definite: pivot {pivot} is {value}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A forward cache was paired with parameters it was not produced by.
    #[error("stale forward cache: {0}")]
    StaleCache(String),

    /// A training loss became non-finite.
    #[error("training diverged at iteration {iter}: loss {loss}")]
    Diverged { iter: usize, loss: f64 },

    /// Operation requires a single Gaussian clutter shape (beta = 2).
    #[error("environment is not single-shape Gaussian clutter: {0}")]
    NonGaussianEnv(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
