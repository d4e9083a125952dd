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

    #[error("parse error at entry {index}: {message}")]
    Parse { index: usize, message: String },

    #[error("schema error at entry {index}: {message}")]
    Schema { index: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unmapped tags (add rules to the taxonomy file): {}", .0.join(", "))]
    UnmappedTags(Vec<String>),

    #[error("unknown label {0:?}; not one of the taxonomy's final tags")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),

    #[error("training diverged at epoch {epoch} (last finite epoch: {last_finite:?})")]
    Divergence {
        epoch: usize,
        last_finite: Option<usize>,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid pairing {representation}+{model}; valid pairs: {valid}")]
    Pairing {
        representation: String,
        model: String,
        valid: String,
    },

    #[error("model mismatch: {0}")]
    Mismatch(String),

    #[error("malformed binary file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from how the tool was invoked (bad flags,
    /// config keys or pairings) rather than from the data it was given.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Config { .. } | Error::Pairing { .. }
        )
    }
}
