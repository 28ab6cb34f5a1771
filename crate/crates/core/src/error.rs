use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: timestamp {timestamp} does not increase (previous {previous})")]
    Ordering { line: usize, timestamp: f64, previous: f64 },

    #[error("quaternion norm {norm} outside accepted range [0.9, 1.1]")]
    QuaternionNorm { norm: f64 },

    #[error("{0}")]
    Validation(String),

    #[error("no pose pairs could be associated within {max_time_diff} s")]
    EmptyAssociation { max_time_diff: f64 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}
