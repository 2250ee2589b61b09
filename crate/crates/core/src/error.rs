use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A pixel of the evaluation region has identical object and background
    /// depth, so the presence rate has a zero denominator there.
    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("victim failure: {message}")]
    VictimFailure {
        message: String,
        /// Captured stderr lines or other context from the victim.
        diagnostics: Vec<String>,
    },

    #[error("unsupported protocol version {found} (expected {expected})")]
    UnsupportedProtocol { found: u64, expected: u64 },

    #[error("malformed image file: {0}")]
    Format(String),

    #[error("checkpoint refused: {0}")]
    CheckpointMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn victim(message: impl Into<String>) -> Self {
        Error::VictimFailure {
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in the depth estimator rather than
    /// in the caller's inputs.
    pub fn is_victim_failure(&self) -> bool {
        matches!(
            self,
            Error::VictimFailure { .. } | Error::UnsupportedProtocol { .. }
        )
    }
}
