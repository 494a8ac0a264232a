//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the simulator, trainers and the experiment harness.
#[derive(Debug, Error)]
pub enum CaraError {
    /// Config text could not be parsed; names the offending line and key.
    #[error("config line {line}, key `{key}`: {message}")]
    ConfigParse {
        line: usize,
        key: String,
        message: String,
    },

    /// A config value violates an invariant; names the key and constraint.
    #[error("config key `{key}`: {message}")]
    ConfigInvalid { key: String, message: String },

    /// Vector/matrix dimension mismatch.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// NaN or infinity surfaced where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Precondition violation not covered by a more specific variant.
    #[error("{0}")]
    InvalidArgument(String),

    /// `step` was called before `reset`.
    #[error("environment must be reset before stepping")]
    NotReset,

    /// A training update produced NaN; reports where the run died.
    #[error("numerical abort at episode {episode}, step {step}: {detail}")]
    NanAbort {
        episode: usize,
        step: usize,
        detail: String,
    },

    /// Checkpoint file is missing, corrupt or incompatible.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CaraError>;
