use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid structure: {0}")]
    InvalidSpec(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("survival underflows to zero at x = {0}")]
    TailUnderflow(f64),
    #[error("invalid data at {index}: {reason}")]
    InvalidData { index: usize, reason: String },
    #[error("cut point {cut} must lie strictly inside the data range ({min}, {max})")]
    InvalidCutPoint { cut: f64, min: f64, max: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("target density integrates to {mass} over [0, {horizon}] (< 0.9)")]
    HorizonTooSmall { mass: f64, horizon: f64 },
    #[error("bootstrap p-value requires a fitted model")]
    MissingModel,
    #[error("format error: {0}")]
    Format(String),
    #[error("dataset contains no observations")]
    EmptyDataset,
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn data(index: usize, reason: impl Into<String>) -> Self {
        Error::InvalidData { index, reason: reason.into() }
    }

    /// True for errors caused by user-supplied data or documents rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidData { .. }
                | Error::Format(_)
                | Error::EmptyDataset
                | Error::Io(_)
                | Error::InvalidCutPoint { .. }
                | Error::InsufficientData(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
