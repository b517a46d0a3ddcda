//! Error type shared by the whole crate.
//!
//! The split matters at the CLI boundary: `Domain`, `Contract` and `Parse`
//! are the caller's fault (exit code 2), everything else is a task failure
//! (exit code 3).

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the mathematical inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// An API contract (e.g. a required boundedness flag) was violated.
    #[error("contract error: {0}")]
    Contract(String),

    /// Malformed input text (set files, function files, config files).
    #[error("parse error: {0}")]
    Parse(String),

    /// An internal numerical self-check failed; signals a broken implementation,
    /// not bad input.
    #[error("numerical integrity error: {0}")]
    NumericalIntegrity(String),

    /// A task-level failure while running an experiment.
    #[error("task error: {0}")]
    Task(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than runtime failure.
    #[must_use]
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Contract(_) | Error::Parse(_))
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
