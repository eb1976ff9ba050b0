use std::path::PathBuf;

use thiserror::Error;

use crate::nn::NnError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in frame {frame} at byte {offset}: {message}")]
    Parse {
        frame: usize,
        offset: usize,
        message: String,
    },
    #[error("format error in frame {frame_index}: {message}")]
    Format { frame_index: i64, message: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid annotation: {0}")]
    Annotation(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model file error: {0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
