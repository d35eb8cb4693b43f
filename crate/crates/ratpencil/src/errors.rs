use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the operation's domain (zero block size,
    /// unsupported kind, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Inputs violate a structural precondition (degree/partition mismatch,
    /// missing block pattern, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// A transformation that must be invertible is numerically singular.
    #[error("degenerate transformation: {0}")]
    Degenerate(String),

    /// An iteration ran out of budget.
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A redundant internal cross-check failed; indicates a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
