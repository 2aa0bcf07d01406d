//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("invalid audio: {0}")]
    Audio(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown word label: {0}")]
    UnknownLabel(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training aborted at step {step}: {reason}")]
    TrainingAborted { step: u64, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint version mismatch: found {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("complete separation detected: {0}")]
    Separation(String),

    #[error("fit did not converge after {iterations} iterations (last max step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("invalid regression input: {0}")]
    Regression(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn audio(msg: impl Into<String>) -> Self {
        Error::Audio(msg.into())
    }

    pub(crate) fn dataset(msg: impl Into<String>) -> Self {
        Error::Dataset(msg.into())
    }

    pub(crate) fn checkpoint(msg: impl Into<String>) -> Self {
        Error::Checkpoint(msg.into())
    }
}
