use thiserror::Error;

/// Errors surfaced by every module of the crate.
///
/// The CLI maps `Parse` and `Domain` to exit code 1 and `Verification`
/// to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}
