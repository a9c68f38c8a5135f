use std::fmt;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad scenario or arguments (exit 1).
    Config { line: usize, message: String },
    /// I/O failure while reading inputs or writing outputs (exit 1).
    Io(String),
    /// A solver gave up (exit 2).
    Solver(String),
    /// The design cannot work as specified (exit 3).
    Infeasible(String),
}

impl CliError {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { line, message } => write!(f, "line {line}: {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(m) => write!(f, "solver did not converge: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible design: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
