use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature {feature} has invalid value {value}")]
    InvalidFeature { feature: &'static str, value: f64 },

    #[error("invalid service sample at t={timestamp}: fps={fps}, abs={abs}")]
    InvalidServiceSample { timestamp: f64, fps: f64, abs: f64 },

    #[error("empty evaluation")]
    EmptyEvaluation,

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("divergence: non-finite gradient, model rolled back")]
    Divergence,

    #[error("insufficient bootstrap: stream has {available} samples, bootstrap needs more than {required}")]
    InsufficientBootstrap { required: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    TraceFormat {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}; expected columns: {expected}")]
    TraceSchema {
        path: PathBuf,
        message: String,
        expected: String,
    },

    #[error("cannot concatenate an empty list of traces")]
    EmptyConcat,

    #[error("{} run(s) failed, first {first}: {message}", .failed.len())]
    RunsFailed {
        failed: Vec<String>,
        first: String,
        message: String,
    },

    #[error("unsupported snapshot: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
