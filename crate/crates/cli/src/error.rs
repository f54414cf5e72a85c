use std::fmt;

/// Failure of a CLI run, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Configuration or parameter validation; exit 2.
    Invalid(String),
    /// An estimator refused to aggregate (timeouts, zero counts); exit 3.
    Refused(String),
    /// I/O and everything else; exit 1.
    Other(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn other(msg: impl Into<String>) -> Self {
        CliError::Other(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Refused(m) | CliError::Other(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            CliError::Refused(m) => write!(f, "estimator refused: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ballistic::Error> for CliError {
    fn from(e: ballistic::Error) -> Self {
        match e {
            ballistic::Error::Invalid { name, reason } => CliError::Invalid(format!("{name}: {reason}")),
            ballistic::Error::Refused(m) => CliError::Refused(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
