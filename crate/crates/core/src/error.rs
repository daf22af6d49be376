use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller passed an argument outside an operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// Two otherwise valid objects cannot be used together, or an
    /// ensemble description is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// A query session refused to answer because its information budget
    /// is exhausted.
    #[error("information budget exhausted: spent {spent:.6} nats of {limit:.6}")]
    BudgetExhausted { spent: f64, limit: f64 },

    /// An analyst script asked for something the protocol does not allow.
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
