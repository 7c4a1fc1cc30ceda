use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("construction failed: {reason}")]
    ConstructionFailure {
        reason: String,
        /// Last row count attempted, for searches over `m`.
        last_rows: Option<usize>,
    },

    /// Every hypothesis assigns probability zero to the observed predictions.
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
