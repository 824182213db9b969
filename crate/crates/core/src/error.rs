use thiserror::Error;

use crate::glm::FitResult;

/// Every failure the library can report.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("design error: {0}")]
    Design(String),
    /// IRLS ran out of iterations; the last iterate is attached.
    #[error("IRLS did not converge in {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),
    #[error("degrees-of-freedom error: {0}")]
    DegreesOfFreedom(String),
    #[error("support error: {0}")]
    Support(String),
    #[error("degenerate input: {0}")]
    Degeneracy(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("mixing error: {0}")]
    Mixing(String),
    #[error("replication harness error: {0}")]
    Harness(String),
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
