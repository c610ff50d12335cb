use thiserror::Error;

/// Errors raised by the simulation, estimation and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension mismatch, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration value is outside its valid range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Normalization calibration did not converge.
    #[error("calibration failure: {0}")]
    Calibration(String),

    /// The QNDM variance formula diverges at |2P0 - 1| = 1.
    #[error("singular variance: detector population P0 = {p0} gives (2P0-1)^2 = 1")]
    SingularVariance { p0: f64 },

    /// Text input (observable, ansatz, runcard) could not be parsed.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
