use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{location}: malformed record: {message}")]
    Malformed { location: String, message: String },

    #[error("dimension mismatch for `{id}`: expected {expected}, got {actual}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("non-finite value in `{id}` at position {position}")]
    NonFinite { id: String, position: usize },

    #[error("dimension {dimension} is not divisible into {positions} positions")]
    Indivisible { dimension: usize, positions: usize },

    #[error("k-means needs at least {required} points, got {available}")]
    InsufficientPoints { required: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown filter field `{0}`")]
    UnknownField(String),

    #[error("unsupported {what} version {found} (expected {expected})")]
    VersionMismatch {
        what: &'static str,
        found: u64,
        expected: u64,
    },

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error("corrupted {what}: {detail}")]
    Corrupted { what: String, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupted(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Corrupted {
            what: what.into(),
            detail: detail.to_string(),
        }
    }
}
