use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("signal has {samples} samples, shorter than one {window}-sample analysis window")]
    SignalTooShort { samples: usize, window: usize },

    #[error("unsupported sample rate {0} Hz (supported: 8000, 16000)")]
    UnsupportedSampleRate(u32),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("manifest {path}, line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate token id `{0}`")]
    DuplicateToken(String),

    #[error("corpus matching impossible: {0}")]
    Matching(String),

    #[error("language `{language}` cannot supply {requested} tokens (only {available} available)")]
    Shortfall {
        language: String,
        requested: usize,
        available: usize,
    },

    #[error("no word type has at least two tokens; cannot form training pairs")]
    NoPairs,

    #[error("training diverged during {phase} at epoch {epoch}, step {step}: loss is {loss}")]
    Diverged {
        phase: String,
        epoch: usize,
        step: usize,
        loss: f64,
    },

    #[error("cannot sample triplets: {0}")]
    Sampling(String),

    #[error("bad {kind} file: {message}")]
    Format { kind: &'static str, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
