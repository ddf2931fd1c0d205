use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (item not in the
    /// set, set not a subset of the alternatives, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Every member of the set has exp-utility exactly zero.
    #[error("degenerate distribution: every item in the set has zero exp-utility")]
    Degenerate,
    /// The population holds a model family the operation does not support.
    #[error("model family error: expected {expected}, found {found}")]
    Family { expected: &'static str, found: &'static str },
    /// Invalid model parameters or instance structure.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// A restricted solver's precondition does not hold for this instance.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Exhaustive enumeration refused because the pool is too large.
    #[error("brute force refused: {m} alternatives exceeds the limit of {limit}")]
    TooLarge { m: usize, limit: usize },
    /// An observation has probability zero under the model.
    #[error("observation {observation} has zero probability under the model")]
    ZeroProbability { observation: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidModel(msg.into())
}
