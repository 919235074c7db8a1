use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = WavePlanesError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WavePlanesError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("level error: {0}")]
    Level(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("codec error: {0}")]
    Codec(String),

    #[error("dataset error at {path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("metric error: {0}")]
    Metric(String),

    /// Training produced a non-finite loss. The message carries a snapshot
    /// of the step state at the time of failure.
    #[error("training diverged at step {step}: {snapshot}")]
    Divergence { step: usize, snapshot: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WavePlanesError {
    pub(crate) fn dataset(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        WavePlanesError::Dataset {
            path: path.into(),
            message: message.into(),
        }
    }
}
