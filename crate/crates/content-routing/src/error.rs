use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid content function: {0}")]
    InvalidContent(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("mechanism does not match scenario: {0}")]
    Mismatch(String),
    #[error("flow is not an equilibrium (max deviation gain {gain:e})")]
    NotEquilibrium { gain: f64 },
    #[error("degenerate design: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
