use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error("taxonomy contains a cycle through concept `{0}`")]
    TaxonomyCycle(String),

    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),

    #[error("slot {slot} (concept `{concept}`) has no candidate surface")]
    MissingBinding { slot: usize, concept: String },

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("training data needs both labels, found only label {0}")]
    SingleClass(u8),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
