use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Invalid { name: &'static str, reason: String },

    #[error("estimator refused: {0}")]
    Refused(String),

    #[error("function is not bounded: {0}")]
    Unbounded(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { name, reason: reason.into() }
    }

    pub fn refused(reason: impl Into<String>) -> Self {
        Error::Refused(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for parameter checks.
pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(name, reason()))
    }
}
