use thiserror::Error;

/// Failure classes. Each maps onto one process exit code of the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {message} (achieved {achieved:.3e}, required {required:.3e})")]
    Numerical {
        message: String,
        achieved: f64,
        required: f64,
    },

    /// A proven inequality or structural identity failed. `record` holds the
    /// offending data so it can be serialized next to the run outputs.
    #[error("invariant violation: {message}")]
    Invariant {
        message: String,
        record: serde_json::Value,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>, record: serde_json::Value) -> Self {
        Error::Invariant {
            message: msg.into(),
            record,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 1,
            Error::Numerical { .. } => 2,
            Error::Invariant { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
