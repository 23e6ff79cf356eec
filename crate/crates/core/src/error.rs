use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("undefined test: {0}")]
    UndefinedTest(String),

    #[error("exhaustive enumeration refused for k={k} (limit {limit}); use sampling instead")]
    ExhaustiveLimit { k: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by malformed input data (as opposed to bad arguments).
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
