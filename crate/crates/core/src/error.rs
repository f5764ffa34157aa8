use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("arithmetic headroom exceeded: {0}")]
    Headroom(String),

    #[error("transformations do not commute: {0}")]
    NonCommuting(String),

    #[error("space or observable mismatch: {0}")]
    Mismatch(String),

    #[error("complexity budget exceeded: {needed} > {budget} ({what})")]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
    },

    #[error("window too short: {0}")]
    InsufficientWindow(String),

    #[error("reduction depth guard hit after {0} steps")]
    DepthGuard(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
