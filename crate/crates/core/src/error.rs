use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SimError::Domain(msg.into()))
}
