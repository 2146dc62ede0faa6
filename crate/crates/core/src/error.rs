use std::path::PathBuf;
use std::time::Duration;

/// Errors raised anywhere in the simulation and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("unit mismatch: expected {expected}, got {actual}")]
    UnitMismatch { expected: String, actual: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("ROI centered at ({row}, {col}) with side {side} falls outside the {n}x{n} image")]
    RoiOutOfBounds {
        row: i64,
        col: i64,
        side: usize,
        n: usize,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("TV solver diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("external denoiser timed out after {0:?}")]
    Timeout(Duration),

    #[error("external denoiser failed: {0}")]
    ExternalCommand(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error with any context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by a bad configuration rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_) | Error::InvalidGeometry(_) | Error::InvalidParameter(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
