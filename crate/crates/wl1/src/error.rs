//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
///
/// `Parameter` marks violated preconditions on inputs, `Domain` marks
/// mathematically undefined evaluations (e.g. a stability constant past its
/// divergence threshold), `Budget` marks enumeration work that would exceed
/// the configured support budget, and `Construction` marks a counterexample
/// or decomposition whose internal checks failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
