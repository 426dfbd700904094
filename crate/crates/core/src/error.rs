//! Error type shared by every module of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
///
/// Numerical near-degeneracy is never an error: rank decisions are made by
/// thresholds and reported through return values. Errors are reserved for
/// malformed inputs and impossible requests.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two vectors (or a vector and a state) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A coordinate was NaN or infinite.
    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    /// A density was requested for a law that has none with respect to the
    /// base measure (e.g. a law supported on a proper subspace).
    #[error("law is not absolutely continuous with respect to the base measure: {0}")]
    NotAbsolutelyContinuous(String),

    /// Partial reports cannot be combined.
    #[error("cannot merge reports: {0}")]
    Merge(String),
}

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a [`Error::Merge`] with a formatted message.
    pub fn merge(msg: impl Into<String>) -> Self {
        Error::Merge(msg.into())
    }
}
