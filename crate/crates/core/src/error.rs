use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A conditioning outcome has zero probability in the given state.
    #[error("undefined condition: outcome {outcome:+} on particle {particle} in basis {basis} has probability 0")]
    UndefinedCondition {
        particle: usize,
        basis: crate::quantum::Basis,
        outcome: i8,
    },

    /// The simulation is configured in a way that cannot run.
    #[error("configuration error: {0}")]
    Config(String),

    /// A configuration field holds an out-of-range or malformed value.
    #[error("invalid value for `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
