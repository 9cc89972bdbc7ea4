use thiserror::Error;

/// Errors raised by the library. Input errors come from bad arguments to an
/// operation; config errors from an inconsistent scenario or map description.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("pseudometric index {index} out of range for a family of {len}")]
    InvalidIndex { index: usize, len: usize },

    #[error("non-finite coordinate {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("finite set must be nonempty")]
    EmptySet,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trace too short: need at least {needed} points, have {have}")]
    TraceTooShort { needed: usize, have: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
