use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("document {doc_id}: unknown class `{class}`")]
    UnknownClass { doc_id: u64, class: String },

    #[error("topic `{0}` unusable: needs at least one positive and one negative document")]
    TopicUnusable(String),

    #[error("training set must contain both positive and negative examples")]
    SingleClass,

    #[error("pool exhausted")]
    PoolExhausted,

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by input data rather than program logic.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Schema { .. }
                | Error::UnknownClass { .. }
                | Error::TopicUnusable(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
