use axum::http::StatusCode;
use phasefit_core::Error;
use serde::{Deserialize, Serialize};

/// Error payload: a machine-readable kind and the human message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub doc: ErrorDoc,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self { status, doc: ErrorDoc { error: kind.into(), message: message.into() } }
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} '{id}'"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    /// Input problems are 422.
    pub fn input(e: Error) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, kind(&e), e.to_string())
    }

    /// As `input`, except numeric breakdowns inside a fit are 500.
    pub fn fit(e: Error) -> Self {
        match e {
            Error::TailUnderflow(_) | Error::InvalidModel(_) | Error::Domain(_) | Error::InvalidMatrix(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "numeric", e.to_string())
            }
            e => Self::input(e),
        }
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidMatrix(_) => "invalid_matrix",
        Error::Domain(_) => "domain",
        Error::Dimension { .. } => "dimension",
        Error::InvalidSpec(_) => "invalid_spec",
        Error::InvalidModel(_) => "invalid_model",
        Error::TailUnderflow(_) => "tail_underflow",
        Error::InvalidData { .. } => "invalid_data",
        Error::InvalidCutPoint { .. } => "invalid_cut_point",
        Error::InsufficientData(_) => "insufficient_data",
        Error::HorizonTooSmall { .. } => "horizon_too_small",
        Error::MissingModel => "missing_model",
        Error::Format(_) => "format",
        Error::EmptyDataset => "empty_dataset",
        Error::Io(_) => "io",
    }
}
