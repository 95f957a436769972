use std::fmt;

/// Everything a subcommand can fail with, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid configuration.
    Config(String),
    Core(bridgelab::Error),
    Io(std::io::Error),
    /// Too many Monte Carlo replicates failed.
    Replicates { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bridgelab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Config(_) | E::Domain(_)) => 2,
            CliError::Core(E::Regime(_) | E::Unsupported(_)) => 4,
            CliError::Core(_) | CliError::Io(_) | CliError::Replicates { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Replicates { failed, total } => write!(f, "{failed} of {total} replicates failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bridgelab::Error> for CliError {
    fn from(e: bridgelab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}
