//! Request and response bodies. TOML by default, JSON on request.

use axum::http::header::{ACCEPT, CONTENT_TYPE};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use phasefit_core::dataio::{float, Curve, CurveSeries, EntryDoc, Float, ModelSpec};
use phasefit_core::phd::StructureKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

fn media(v: Option<&HeaderValue>) -> Option<Format> {
    let v = v?.to_str().ok()?.to_ascii_lowercase();
    if v.contains("application/json") {
        Some(Format::Json)
    } else if v.contains("toml") {
        Some(Format::Toml)
    } else {
        None
    }
}

impl Format {
    pub fn content_type(self) -> &'static str {
        match self {
            Format::Toml => "application/toml",
            Format::Json => "application/json",
        }
    }

    /// Format of a request body.
    pub fn of_request(headers: &HeaderMap) -> Format {
        media(headers.get(CONTENT_TYPE)).unwrap_or(Format::Toml)
    }

    /// Reply format: `Accept` first, then the request body's format.
    pub fn of_reply(headers: &HeaderMap) -> Format {
        media(headers.get(ACCEPT)).unwrap_or_else(|| Format::of_request(headers))
    }

    pub fn decode<T: DeserializeOwned>(self, body: &[u8]) -> Result<T, ApiError> {
        let text = std::str::from_utf8(body).map_err(|_| ApiError::unprocessable("request body is not UTF-8"))?;
        match self {
            Format::Toml => toml::from_str(text).map_err(|e| ApiError::unprocessable(e.message().to_string())),
            Format::Json => serde_json::from_str(text).map_err(|e| ApiError::unprocessable(e.to_string())),
        }
    }

    pub fn encode<T: Serialize>(self, value: &T) -> Result<String, ApiError> {
        match self {
            Format::Toml => toml::to_string(value).map_err(|e| ApiError::internal(e.to_string())),
            Format::Json => serde_json::to_string(value).map_err(|e| ApiError::internal(e.to_string())),
        }
    }

    pub fn reply<T: Serialize>(self, status: StatusCode, value: &T) -> Response {
        match self.encode(value) {
            Ok(body) => (status, [(CONTENT_TYPE, self.content_type())], body).into_response(),
            Err(e) => self.error(e),
        }
    }

    pub fn error(self, e: ApiError) -> Response {
        let body = self.encode(&e.doc).unwrap_or_else(|_| e.doc.message.clone());
        (e.status, [(CONTENT_TYPE, self.content_type())], body).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub n: usize,
    #[serde(with = "float")]
    pub min: f64,
    #[serde(with = "float")]
    pub max: f64,
    #[serde(with = "float")]
    pub emp_mean: f64,
    /// `nan` for a single observation.
    #[serde(with = "float")]
    pub emp_var: f64,
}

/// One curve; `y` is `nan` where the value underflows. A cut point inside
/// the range appears twice in `x` for curves that jump there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub curve: Curve,
    pub x: Vec<f64>,
    pub y: Vec<Float>,
}

impl From<&CurveSeries> for SeriesDoc {
    fn from(s: &CurveSeries) -> Self {
        Self {
            curve: s.curve,
            x: s.points.iter().map(|p| p.0).collect(),
            y: s.points.iter().map(|p| Float(p.1.unwrap_or(f64::NAN))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub model: ModelSpec,
    /// Defaults to five model means.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub curves: Option<Vec<Curve>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    #[serde(with = "float")]
    pub mean: f64,
    #[serde(with = "float")]
    pub variance: f64,
    pub series: Vec<SeriesDoc>,
}

/// When a fit runs in the background.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Background job when the estimated run time exceeds one second.
    #[default]
    Auto,
    Sync,
    Async,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub dataset: String,
    pub method: String,
    pub structure: StructureKind,
    pub states: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    /// Group method: bin edges starting at 0; the last may be `"inf"`.
    #[serde(default)]
    pub edges: Option<Vec<Float>>,
    /// Group method: equal-width bins over `[0, max]` when `edges` is absent.
    #[serde(default)]
    pub bins: Option<usize>,
    /// Density method: `family:p1,p2`.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub target_horizon: Option<f64>,
    /// `asymptotic` (default) or `bootstrap`.
    #[serde(default)]
    pub pvalue: Option<String>,
    #[serde(default)]
    pub replicates: Option<usize>,
    /// Plot range; defaults to the data maximum.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDoc {
    pub x: Vec<f64>,
    pub cum_hazard: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResponse {
    pub entry: EntryDoc,
    pub series: Vec<SeriesDoc>,
    pub empirical: EmpiricalDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobAccepted {
    pub job: String,
    #[serde(with = "float")]
    pub estimated_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job: String,
    pub state: JobState,
    /// EM iterations reported so far, summed over restarts.
    pub iterations: usize,
    /// Latest reported log-likelihood.
    #[serde(with = "float")]
    pub loglik: f64,
    #[serde(with = "float")]
    pub best_loglik: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<FitResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<crate::error::ErrorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    pub dataset: String,
    pub states: usize,
    pub cut: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub erlang: EntryDoc,
    pub ocp: EntryDoc,
    pub erlang_series: Vec<SeriesDoc>,
    pub ocp_series: Vec<SeriesDoc>,
    pub empirical: EmpiricalDoc,
}
