use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FusionError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("association references unknown document `{0}`")]
    UnknownDocument(String),

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error("negative association weight {weight} on edge ({doc}, {object})")]
    NegativeWeight {
        doc: String,
        object: String,
        weight: f64,
    },

    #[error("edge ({doc}, {object}) listed with conflicting weights")]
    ConflictingWeight { doc: String, object: String },

    #[error("no associations loaded")]
    EmptyAssociations,

    #[error("empty query")]
    EmptyQuery,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no queries in run")]
    EmptyRun,

    #[error("run and qrels share no query ids")]
    DisjointQueries,

    #[error("object index cache: {0}")]
    Cache(String),
}

impl FusionError {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        FusionError::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FusionError::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user-supplied settings rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, FusionError::InvalidParameter(_))
    }
}
