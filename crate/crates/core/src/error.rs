use thiserror::Error;

/// Errors raised by the converter model, decoders and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// |alpha * x| too large for f64 floor to keep integer resolution.
    #[error("precision error: |alpha*x| = {0:e} exceeds 2^52")]
    Precision(f64),

    #[error("state error: {0}")]
    State(String),

    #[error("filter design error: {0}")]
    Design(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse { .. } => 2,
            Error::Verification(_) => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
