//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two series (or a segment and an interval) that must agree in length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An interval does not fit inside the series it addresses.
    #[error("interval [{start}, {start}+{length}) out of bounds for series of length {series_len}")]
    IntervalOutOfBounds {
        start: usize,
        length: usize,
        series_len: usize,
    },

    /// Invalid argument that is not a length/interval problem.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Text-format parse failure; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Tensor shapes incompatible with the requested graph operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// An operation was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),

    /// A training loop produced a non-finite loss.
    #[error("training diverged during {phase} phase at iteration {iteration}")]
    TrainingDiverged { phase: String, iteration: usize },

    /// A pure predictor returned different labels for the same input.
    #[error("predictor violated its determinism contract: {0}")]
    PredictorContract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
