use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected} features, got {actual}")]
    InputShape { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("degenerate dataset{}: {reason}", center.map(|c| format!(" at center {c}")).unwrap_or_default())]
    DegenerateDataset {
        center: Option<usize>,
        reason: String,
    },

    #[error("degenerate evaluation: {0}")]
    DegenerateEvaluation(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid domain spec: {0}")]
    Spec(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error("dataset format error at line {line}: {reason}")]
    DatasetFormat { line: usize, reason: String },

    #[error("experiment spec error: {0}")]
    ExperimentSpec(String),

    #[error("scenario {scenario}, seed {seed}, user {user}")]
    Experiment {
        scenario: String,
        seed: u64,
        user: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a center index to a degenerate-dataset error.
    pub(crate) fn at_center(self, index: usize) -> Self {
        match self {
            Error::DegenerateDataset { reason, .. } => Error::DegenerateDataset {
                center: Some(index),
                reason,
            },
            other => other,
        }
    }
}
