use std::path::PathBuf;

use crate::trainer::TrainReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("empty output: {0}")]
    EmptyOutput(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("encode error at position {position}: unexpected character {found:?}")]
    Encode { position: usize, found: char },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("timed out waiting for {0}")]
    Timeout(String),

    #[error("training diverged (last good epoch: {last_good_epoch:?})")]
    Diverged {
        last_good_epoch: Option<usize>,
        partial: Option<Box<TrainReport>>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
