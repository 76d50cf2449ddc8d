//! HTTP service for dataset upload, curve evaluation and fitting.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/datasets` | data file, raw or multipart field `file` | [`DatasetSummary`] |
//! | GET | `/datasets/{id}` | | [`DatasetSummary`] |
//! | POST | `/evaluate` | [`EvaluateRequest`] | [`EvaluateResponse`] |
//! | POST | `/fit` | [`FitRequest`] | [`FitResponse`], or `202` + [`JobAccepted`] |
//! | GET | `/jobs/{id}` | | [`JobStatus`] |
//! | POST | `/fit-ocp/compare` | [`CompareRequest`] | [`CompareResponse`] |
//!
//! Bodies are TOML unless `Content-Type`/`Accept` ask for `application/json`.
//! Invalid input is `422`, unknown ids `404`, oversize uploads `413` and
//! numeric failures inside a fit `500`.

mod api;
mod error;
mod jobs;
mod store;
mod wire;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ErrorDoc};
pub use jobs::{Jobs, Pool};
pub use store::{dataset_id, SessionStore};
pub use wire::*;

pub const DEFAULT_PORT: u16 = 8741;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub bind: IpAddr,
    pub port: u16,
    /// Datasets kept before least-recently-used eviction.
    pub capacity: usize,
    /// Largest accepted request body in bytes.
    pub max_upload: usize,
    pub threads: usize,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            capacity: 64,
            max_upload: 8 * 1024 * 1024,
            threads: threads_from_env(),
            cors_origin: None,
        }
    }
}

/// `PHASEFIT_THREADS` when set to a positive integer, else the hardware count.
pub fn threads_from_env() -> usize {
    std::env::var("PHASEFIT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub struct AppState {
    pub store: SessionStore,
    pub jobs: Jobs,
    pub pool: Pool,
}

impl AppState {
    pub fn new(config: &Config) -> Self {
        Self { store: SessionStore::new(config.capacity), jobs: Jobs::default(), pool: Pool::new(config.threads) }
    }
}

fn cors(config: &Config) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any).expose_headers(Any);
    match config.cors_origin.as_deref().and_then(|o| o.parse::<axum::http::HeaderValue>().ok()) {
        Some(origin) => layer.allow_origin(origin),
        None => layer.allow_origin(Any),
    }
}

pub fn router(config: &Config) -> Router {
    router_with_state(config, Arc::new(AppState::new(config)))
}

pub fn router_with_state(config: &Config, state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(api::upload))
        .route("/datasets/{id}", get(api::dataset))
        .route("/evaluate", post(api::evaluate))
        .route("/fit", post(api::fit))
        .route("/jobs/{id}", get(api::job))
        .route("/fit-ocp/compare", post(api::compare))
        .fallback(api::not_found)
        .layer(DefaultBodyLimit::max(config.max_upload))
        .layer(cors(config))
        .with_state(state)
}

/// Serves on an already bound listener until the future is dropped.
pub async fn serve_on(listener: TcpListener, config: &Config) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

pub async fn serve(config: &Config) -> std::io::Result<()> {
    let listener = TcpListener::bind(SocketAddr::new(config.bind, config.port)).await?;
    serve_on(listener, config).await
}
