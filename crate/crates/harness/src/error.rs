use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] orlicz_lorentz::Error),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Inputs that do not fit the requested suite or checker.
    #[error("input mismatch: {0}")]
    Input(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn arg(msg: impl Into<String>) -> Self {
        HarnessError::Argument(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        HarnessError::Input(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { context: context.into(), source }
    }

    pub(crate) fn parse(e: &serde_json::Error) -> Self {
        HarnessError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
