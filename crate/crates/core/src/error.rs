use thiserror::Error;

/// Errors raised across the detection pipeline.
#[derive(Debug, Error)]
pub enum DmdError {
    /// Shapes or lengths that do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    /// A configuration or argument outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The data carries no signal at all (every singular value is zero).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// An iterative decomposition failed to converge.
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        /// Row-major entries of the offending operator, when there is one.
        operator: Option<Vec<f64>>,
    },

    /// Malformed or truncated input streams or image files.
    #[error("decode error: {0}")]
    Decode(String),

    /// Evaluation requested on data that cannot support it.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DmdError>;

pub(crate) fn structural(msg: impl Into<String>) -> DmdError {
    DmdError::Structural(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> DmdError {
    DmdError::Parameter(msg.into())
}

pub(crate) fn decode(msg: impl Into<String>) -> DmdError {
    DmdError::Decode(msg.into())
}
