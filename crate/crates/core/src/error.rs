use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curves are defined on different grids")]
    GridMismatch,

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("no bandwidth/dimension candidate produced a finite cross-validation score")]
    NoValidCandidate,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("dataset too small: {usable} usable day pairs, need at least {required}")]
    DatasetTooSmall { usable: usize, required: usize },

    #[error("malformed sample file {path}: {reason}")]
    MalformedSample { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
