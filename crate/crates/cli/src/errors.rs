//! Error type for the runner, mapping every failure onto the documented
//! exit codes: 0 pass, 1 certification fail, 2 usage, 3 numeric.

use std::fmt;

/// Anything that can stop an experiment before it produces a verdict.
#[derive(Debug)]
pub enum CliError {
    /// Bad command line or config: unknown keys, malformed values.
    Usage(String),
    /// An error surfaced by the computation itself.
    Core(linstab::Error),
    /// Filesystem trouble while writing artifacts.
    Io(std::io::Error),
}

impl CliError {
    /// Process exit code for this failure.  Parameter and input errors are
    /// usage mistakes (2); numeric and domain failures, like anything that
    /// breaks mid-computation, exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(linstab::Error::Parameter(_))
            | CliError::Core(linstab::Error::InvalidInput(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<linstab::Error> for CliError {
    fn from(e: linstab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
