//! Endpoint handlers.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{FromRequest, Multipart, Path, Request, State};
use axum::http::header::{CONTENT_TYPE, LOCATION};
use axum::http::{HeaderMap, StatusCode};
use axum::response::Response;
use phasefit_core::dataio::{
    plot_series, read_dataset, CurveSeries, Dataset, EntryDoc, GroupedDataset, PlotRequest, ReportEntry,
};
use phasefit_core::fit::{
    em_fit_group_with_progress, em_fit_point, em_fit_point_with_progress, fit_density_with_progress, fit_ocp,
    FitMethod, FitOptions, FitResult, ParametricRefit, Progress, Target,
};
use phasefit_core::gof::{empirical_cum_hazard, empirical_moments, gof_report, GoFReport, PValueMethod};
use phasefit_core::phd::{StructureKind, MAX_STATES};
use phasefit_core::Lifetime;

use crate::error::ApiError;
use crate::store::dataset_id;
use crate::wire::*;
use crate::AppState;

/// Largest plot grid served.
const MAX_POINTS: usize = 20_000;
/// Seconds per unit of `observations × m² × restarts × max_iter`.
const SECONDS_PER_UNIT: f64 = 5e-8;

fn body(b: Result<Bytes, BytesRejection>) -> Result<Bytes, ApiError> {
    b.map_err(|r| {
        let kind = if r.status() == StatusCode::PAYLOAD_TOO_LARGE { "payload_too_large" } else { "bad_body" };
        ApiError::new(r.status(), kind, r.body_text())
    })
}

fn summary(id: String, data: &Dataset) -> DatasetSummary {
    let (emp_mean, emp_var) = empirical_moments(data).unwrap_or((data.mean(), f64::NAN));
    DatasetSummary { id, n: data.len(), min: data.min(), max: data.max(), emp_mean, emp_var }
}

async fn upload_bytes(req: Request) -> Result<Bytes, ApiError> {
    let multipart = req
        .headers()
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !multipart {
        return body(Bytes::from_request(req, &()).await);
    }
    let mut form = Multipart::from_request(req, &()).await.map_err(|r| ApiError::new(r.status(), "bad_body", r.body_text()))?;
    let mut first = None;
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::new(e.status(), "bad_body", e.body_text()))? {
        let named_file = field.name() == Some("file");
        let bytes = field.bytes().await.map_err(|e| {
            let kind = if e.status() == StatusCode::PAYLOAD_TOO_LARGE { "payload_too_large" } else { "bad_body" };
            ApiError::new(e.status(), kind, e.body_text())
        })?;
        if named_file {
            return Ok(bytes);
        }
        first.get_or_insert(bytes);
    }
    first.ok_or_else(|| ApiError::unprocessable("multipart upload has no file field"))
}

pub async fn upload(State(app): State<Arc<AppState>>, req: Request) -> Response {
    let fmt = Format::of_reply(req.headers());
    let result = async {
        let bytes = upload_bytes(req).await?;
        let data = read_dataset(&bytes[..]).map_err(ApiError::input)?;
        let id = dataset_id(&bytes);
        let data = app.store.insert(id.clone(), data);
        Ok(summary(id, &data))
    }
    .await;
    match result {
        Ok(s) => fmt.reply(StatusCode::CREATED, &s),
        Err(e) => fmt.error(e),
    }
}

pub async fn dataset(State(app): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    let fmt = Format::of_reply(&headers);
    match app.store.get(&id) {
        Some(data) => fmt.reply(StatusCode::OK, &summary(id, &data)),
        None => fmt.error(ApiError::not_found("dataset", &id)),
    }
}

fn series(model: &(impl Lifetime + ?Sized), horizon: f64, points: Option<usize>) -> Result<Vec<SeriesDoc>, ApiError> {
    let mut req = PlotRequest::new(horizon);
    if let Some(p) = points {
        req.points = p;
    }
    plot_docs(model, &req)
}

fn plot_docs(model: &(impl Lifetime + ?Sized), req: &PlotRequest) -> Result<Vec<SeriesDoc>, ApiError> {
    if req.points > MAX_POINTS {
        return Err(ApiError::unprocessable(format!("points must be at most {MAX_POINTS}")));
    }
    let s: Vec<CurveSeries> = plot_series(model, req).map_err(ApiError::input)?;
    Ok(s.iter().map(SeriesDoc::from).collect())
}

fn evaluate_now(req: EvaluateRequest) -> Result<EvaluateResponse, ApiError> {
    let model = req.model.build().map_err(ApiError::input)?;
    let horizon = match req.horizon {
        Some(h) => h,
        None => model.default_horizon().map_err(ApiError::input)?,
    };
    let mut plot = PlotRequest::new(horizon);
    if let Some(p) = req.points {
        plot.points = p;
    }
    if let Some(c) = req.curves {
        plot.curves = c;
    }
    let series = plot_docs(&model, &plot)?;
    let (mean, variance) = model.moments().map_err(ApiError::input)?;
    Ok(EvaluateResponse { mean, variance, series })
}

pub async fn evaluate(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    raw: Result<Bytes, BytesRejection>,
) -> Response {
    let fmt = Format::of_reply(&headers);
    let result = async {
        let req: EvaluateRequest = Format::of_request(&headers).decode(&body(raw)?)?;
        app.pool.run(move || evaluate_now(req)).await?
    }
    .await;
    match result {
        Ok(r) => fmt.reply(StatusCode::OK, &r),
        Err(e) => fmt.error(e),
    }
}

fn options(seed: u64, max_iter: Option<usize>, rel_tol: Option<f64>, restarts: Option<usize>) -> Result<FitOptions, ApiError> {
    let d = FitOptions::default();
    let opts = FitOptions {
        max_iter: max_iter.unwrap_or(d.max_iter),
        rel_tol: rel_tol.unwrap_or(d.rel_tol),
        restarts: restarts.unwrap_or(d.restarts),
        seed,
    };
    opts.validate().map_err(ApiError::input)?;
    Ok(opts)
}

fn check_states(m: usize) -> Result<(), ApiError> {
    if m == 0 || m > MAX_STATES {
        return Err(ApiError::unprocessable(format!("states must be in 1..={MAX_STATES}, got {m}")));
    }
    Ok(())
}

enum Input {
    Point,
    Group(GroupedDataset),
    Density { target: Target, horizon: f64, nodes: usize },
}

/// A validated fit request, ready to run.
pub struct Prepared {
    data: Arc<Dataset>,
    input: Input,
    structure: StructureKind,
    m: usize,
    opts: FitOptions,
    pvalue: PValueMethod,
    horizon: Option<f64>,
    points: Option<usize>,
}

impl Prepared {
    fn new(req: &FitRequest, data: Arc<Dataset>) -> Result<Self, ApiError> {
        check_states(req.states)?;
        let opts = options(req.seed, req.max_iter, req.rel_tol, req.restarts)?;
        let method: FitMethod = req.method.parse().map_err(ApiError::input)?;
        let input = match method {
            FitMethod::Point => Input::Point,
            FitMethod::Group => {
                let grouped = match (&req.edges, req.bins) {
                    (Some(edges), _) => GroupedDataset::from_dataset(&data, edges.iter().map(|e| e.0).collect()),
                    (None, Some(bins)) => GroupedDataset::equal_width(&data, bins, data.max()),
                    (None, None) => return Err(ApiError::unprocessable("method 'group' needs 'edges' or 'bins'")),
                };
                Input::Group(grouped.map_err(ApiError::input)?)
            }
            FitMethod::Density => {
                let spec = req.target.as_deref().ok_or_else(|| ApiError::unprocessable("method 'density' needs 'target'"))?;
                let target: Target = spec.parse().map_err(ApiError::input)?;
                let horizon = match req.target_horizon {
                    Some(h) => h,
                    None => target.default_horizon().map_err(ApiError::input)?,
                };
                Input::Density { target, horizon, nodes: req.nodes.unwrap_or(64) }
            }
            FitMethod::OneCutPoint => {
                return Err(ApiError::unprocessable("cut-point fits are served by /fit-ocp/compare"));
            }
        };
        let pvalue = match req.pvalue.as_deref().unwrap_or("asymptotic") {
            "asymptotic" => PValueMethod::Asymptotic,
            "bootstrap" => PValueMethod::Bootstrap { replicates: req.replicates.unwrap_or(99), seed: req.seed },
            other => return Err(ApiError::unprocessable(format!("unknown p-value method '{other}'"))),
        };
        Ok(Self { data, input, structure: req.structure, m: req.states, opts, pvalue, horizon: req.horizon, points: req.points })
    }

    /// Rough wall-clock estimate of the fit.
    pub fn estimated_seconds(&self) -> f64 {
        let obs = match &self.input {
            Input::Point => self.data.len(),
            Input::Group(g) => g.intervals().len(),
            Input::Density { nodes, .. } => *nodes,
        } as f64;
        let search = if self.structure == StructureKind::HyperErlang { 10.0 } else { 1.0 };
        let m = self.m as f64;
        obs * m * m * (self.opts.restarts * self.opts.max_iter) as f64 * search * SECONDS_PER_UNIT
    }

    fn run(&self, progress: &(dyn Fn(Progress) + Sync)) -> Result<FitResponse, ApiError> {
        let (s, m, o) = (self.structure, self.m, &self.opts);
        let fit = match &self.input {
            Input::Point => em_fit_point_with_progress(&self.data, s, m, o, progress),
            Input::Group(g) => em_fit_group_with_progress(g, s, m, o, progress),
            Input::Density { target, horizon, nodes } => {
                fit_density_with_progress(&|x| target.pdf(x), *horizon, *nodes, s, m, o, progress)
            }
        }
        .map_err(ApiError::fit)?;
        let gof = self.gof(&fit)?;
        let series = series(&fit.model, self.horizon.unwrap_or(self.data.max()), self.points)?;
        Ok(FitResponse {
            entry: EntryDoc::from(&ReportEntry { fit, gof: Some(gof) }),
            series,
            empirical: empirical(&self.data),
        })
    }

    fn gof(&self, fit: &FitResult) -> Result<GoFReport, ApiError> {
        let refit = ParametricRefit { fit, opts: self.opts };
        gof_report(&self.data, &fit.model, self.pvalue, Some(&refit)).map_err(ApiError::fit)
    }
}

fn empirical(data: &Dataset) -> EmpiricalDoc {
    let (x, cum_hazard) = empirical_cum_hazard(data).into_iter().unzip();
    EmpiricalDoc { x, cum_hazard }
}

fn dataset_for(app: &AppState, id: &str) -> Result<Arc<Dataset>, ApiError> {
    app.store.get(id).ok_or_else(|| ApiError::not_found("dataset", id))
}

pub async fn fit(State(app): State<Arc<AppState>>, headers: HeaderMap, raw: Result<Bytes, BytesRejection>) -> Response {
    let fmt = Format::of_reply(&headers);
    let prepared = (|| {
        let req: FitRequest = Format::of_request(&headers).decode(&body(raw)?)?;
        let data = dataset_for(&app, &req.dataset)?;
        Ok::<_, ApiError>((Prepared::new(&req, data)?, req.mode))
    })();
    let (prepared, mode) = match prepared {
        Ok(p) => p,
        Err(e) => return fmt.error(e),
    };
    let estimate = prepared.estimated_seconds();
    let background = match mode {
        Mode::Sync => false,
        Mode::Async => true,
        Mode::Auto => estimate > 1.0,
    };
    if !background {
        return match app.pool.run(move || prepared.run(&|_| {})).await {
            Ok(Ok(r)) => fmt.reply(StatusCode::OK, &r),
            Ok(Err(e)) | Err(e) => fmt.error(e),
        };
    }
    let (id, job) = app.jobs.create();
    let failed = job.clone();
    app.pool.spawn(move || job.finish(prepared.run(&|p| job.progress(p))), move |e| failed.finish(Err(e)));
    let mut resp = fmt.reply(StatusCode::ACCEPTED, &JobAccepted { job: id.clone(), estimated_seconds: estimate });
    if let Ok(v) = format!("/jobs/{id}").parse() {
        resp.headers_mut().insert(LOCATION, v);
    }
    resp
}

pub async fn job(State(app): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    let fmt = Format::of_reply(&headers);
    match app.jobs.get(&id) {
        Some(job) => fmt.reply(StatusCode::OK, &job.status(&id)),
        None => fmt.error(ApiError::not_found("job", &id)),
    }
}

fn compare_now(req: CompareRequest, data: Arc<Dataset>) -> Result<CompareResponse, ApiError> {
    check_states(req.states)?;
    let opts = options(req.seed, req.max_iter, req.rel_tol, req.restarts)?;
    let ocp = fit_ocp(&data, req.states, req.cut, &opts).map_err(ApiError::fit)?;
    let erlang = em_fit_point(&data, StructureKind::Erlang, req.states, &opts).map_err(ApiError::fit)?;
    let horizon = req.horizon.unwrap_or(data.max());
    let entry = |fit: FitResult| -> Result<(EntryDoc, Vec<SeriesDoc>), ApiError> {
        let gof = gof_report(&data, &fit.model, PValueMethod::Asymptotic, None).map_err(ApiError::fit)?;
        let s = series(&fit.model, horizon, req.points)?;
        Ok((EntryDoc::from(&ReportEntry { fit, gof: Some(gof) }), s))
    };
    let (erlang, erlang_series) = entry(erlang)?;
    let (ocp, ocp_series) = entry(ocp)?;
    Ok(CompareResponse { erlang, ocp, erlang_series, ocp_series, empirical: empirical(&data) })
}

pub async fn compare(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    raw: Result<Bytes, BytesRejection>,
) -> Response {
    let fmt = Format::of_reply(&headers);
    let result = async {
        let req: CompareRequest = Format::of_request(&headers).decode(&body(raw)?)?;
        let data = dataset_for(&app, &req.dataset)?;
        app.pool.run(move || compare_now(req, data)).await?
    }
    .await;
    match result {
        Ok(r) => fmt.reply(StatusCode::OK, &r),
        Err(e) => fmt.error(e),
    }
}

pub async fn not_found(headers: HeaderMap) -> Response {
    Format::of_reply(&headers).error(ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint"))
}
