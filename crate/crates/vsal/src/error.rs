use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A query references an item or class outside the hypothesis space,
    /// or repeats an item already queried.
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// An operation whose definition conditions on a nonempty version space
    /// was called on an empty one.
    #[error("empty version space: {0}")]
    EmptyVersionSpace(&'static str),

    /// Component sizes do not line up (mask vs. matrix vs. prior vs. items).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric argument violates its constraints (weights, probabilities, radii).
    #[error("invalid value: {0}")]
    InvalidValue(String),

    /// An experiment configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A generator or oracle was asked for more than its configured scale limit.
    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),

    /// A text file (matrix, sidecar, query list) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
