//! Command-line front end: config parsing, command dispatch, and
//! reproducible CSV/manifest reporting.

pub mod commands;
pub mod config;
pub mod fieldexpr;
pub mod output;

/// Anything a command can fail with, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Config file problems, with the offending line when known.
    Config { path: String, line: Option<usize>, message: String },
    /// Bad flags or a command that the config does not support.
    Usage(String),
    /// Failure inside the numerical core.
    Core(conelab::Error),
    Io(std::io::Error),
}

impl CliError {
    /// 2 for validation, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                conelab::Error::Numerical(_)
                | conelab::Error::Meshing(_)
                | conelab::Error::ZeroGradientBound => 3,
                _ => 2,
            },
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { path, line: Some(n), message } => {
                write!(f, "{path}: line {n}: {message}")
            }
            CliError::Config { path, line: None, message } => write!(f, "{path}: {message}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<conelab::Error> for CliError {
    fn from(e: conelab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
