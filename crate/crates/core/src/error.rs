use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the gaze pipeline.
#[derive(Debug, Error)]
pub enum GazeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("unknown gender code {code:?} at line {line} (expected F or M)")]
    UnknownGender { line: u64, code: String },

    #[error("duplicate sample key (participant {participant}, trial {trial}, t {t_ms} ms) at line {line}")]
    DuplicateKey {
        line: u64,
        participant: String,
        trial: String,
        t_ms: f64,
    },

    #[error("trial list is empty")]
    EmptyTrialList,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signal too short to filter: {len} samples, frame size {frame}")]
    TooShortToFilter { len: usize, frame: usize },

    #[error("trajectory too short: {len} samples, need at least {min}")]
    TrajectoryTooShort { len: usize, min: usize },

    #[error("velocity-threshold grid too coarse or too low: no candidate gives every participant a fixation")]
    NoQualifyingThreshold,

    #[error("empty {channel} channel")]
    EmptyChannel { channel: &'static str },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feature schema mismatch: model expects {expected:?}, got {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl GazeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GazeError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by caller-supplied configuration rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(self, GazeError::InvalidConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, GazeError>;
