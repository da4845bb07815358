use std::fmt;

/// Failure of one CLI run, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },
    Compute {
        module: &'static str,
        operation: &'static str,
        source: polaron_core::Error,
    },
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            line: None,
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::Compute { .. } | CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config {
                line: Some(l),
                key,
                message,
            } => {
                write!(f, "config error at line {l}, key `{key}`: {message}")
            }
            CliError::Config {
                line: None,
                key,
                message,
            } => write!(f, "config error, key `{key}`: {message}"),
            CliError::Compute {
                module,
                operation,
                source,
            } => write!(f, "compute error in {module}::{operation}: {source}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Tags a core error with the operation that raised it.
pub trait Context<T> {
    fn during(self, module: &'static str, operation: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for polaron_core::Result<T> {
    fn during(self, module: &'static str, operation: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Compute {
            module,
            operation,
            source,
        })
    }
}
