use thiserror::Error;

/// Errors raised by the processing pipeline and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("learning gain {0} outside [0, 1]")]
    InvalidGain(f64),
    #[error("non-finite input sample {0}")]
    NonFiniteInput(f64),
    #[error("non-finite spectrum value at {freq_hz} Hz")]
    NonFiniteSpectrum { freq_hz: f64 },
    #[error("reference value is zero at index {0}")]
    ZeroReference(usize),
    #[error("peak index {index} is on the boundary of a series of length {len}")]
    BoundaryIndex { index: usize, len: usize },
    #[error("decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub(crate) fn invalid_series(msg: impl Into<String>) -> Self {
        Error::InvalidSeries(msg.into())
    }

    /// Process exit code for this error class. Zero is reserved for success
    /// and 2 for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 3,
            Error::Schema(_) => 4,
            Error::Decode { .. } => 5,
            Error::InsufficientData(_) => 6,
            Error::Config(_) => 8,
            Error::Io(_) => 9,
            _ => 7,
        }
    }
}
