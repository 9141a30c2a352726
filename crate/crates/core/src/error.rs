use std::io;

use thiserror::Error;

/// Errors returned by table ingestion, summary generation and the query engine.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Returned when a dense operation would have to materialize too many cells.
    #[error("domain of {m} cells is too large to materialize (limit {limit})")]
    DomainTooLarge { m: u64, limit: u64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("metadata: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
