use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge references unknown product code `{0}`")]
    UnknownCode(String),

    #[error("empty graph after masking")]
    EmptyGraph,

    #[error("segment too short: {segment} segment has {len} points, need at least {needed}")]
    SegmentTooShort {
        segment: &'static str,
        len: usize,
        needed: usize,
    },

    #[error("zero variance in training segment for product `{0}`")]
    ZeroVariance(String),

    #[error("product mismatch between graph and feature table: {0}")]
    ProductMismatch(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
