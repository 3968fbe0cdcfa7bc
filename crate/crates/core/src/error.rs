use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the pipeline stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The input stream could not be parsed at all (e.g. missing header).
    #[error("parse error: {0}")]
    Parse(String),

    /// An operation received input that violates its preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A feature vector did not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A gram was looked up that is not part of the fitted vocabulary.
    #[error("unknown gram: {0:?}")]
    UnknownGram(String),

    /// A condition was requested that is not present in a recommendation table.
    #[error("unknown condition: {0:?}")]
    UnknownCondition(String),

    /// A required on-disk artifact is missing (reported with its path).
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
