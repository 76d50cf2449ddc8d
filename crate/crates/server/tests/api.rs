use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use phasefit_core::dataio::{read_dataset, GroupedDataset};
use phasefit_core::fit::{em_fit_group, em_fit_point, fit_density, FitOptions, Target};
use phasefit_core::phd::StructureKind;
use phasefit_server::*;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

fn config() -> Config {
    Config { threads: 2, ..Config::default() }
}

fn core_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn example_bytes() -> Vec<u8> {
    std::fs::read(core_data("numerical_example.txt")).unwrap()
}

fn rotterdam_bytes() -> Vec<u8> {
    let text = std::fs::read_to_string(core_data("rotterdam.csv")).unwrap();
    let mut out = String::from("\"dtime\"\n");
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == "1" && f[2] == "1" {
            out.push_str(f[3]);
            out.push('\n');
        }
    }
    out.into_bytes()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String, axum::http::HeaderMap) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap(), headers)
}

async fn post(app: &Router, path: &str, body: impl Into<Body>) -> (StatusCode, String) {
    let req = Request::post(path).header(header::CONTENT_TYPE, "application/toml").body(body.into()).unwrap();
    let (s, b, _) = send(app, req).await;
    (s, b)
}

async fn get(app: &Router, path: &str) -> (StatusCode, String) {
    let (s, b, _) = send(app, Request::get(path).body(Body::empty()).unwrap()).await;
    (s, b)
}

fn parse<T: DeserializeOwned>(body: &str) -> T {
    toml::from_str(body).unwrap_or_else(|e| panic!("{e}\n{body}"))
}

async fn upload(app: &Router, bytes: Vec<u8>) -> DatasetSummary {
    let (s, b) = post(app, "/datasets", bytes).await;
    assert_eq!(s, StatusCode::CREATED, "{b}");
    parse(&b)
}

fn survival_y(r: &EvaluateResponse) -> Vec<f64> {
    r.series[0].y.iter().map(|f| f.0).collect()
}

#[tokio::test]
async fn upload_and_lookup() {
    let app = router(&config());
    let s = upload(&app, example_bytes()).await;
    assert_eq!(s.n, 8);
    let lib = read_dataset(&example_bytes()[..]).unwrap();
    assert_eq!((s.min, s.max), (lib.min(), lib.max()));
    assert_eq!(s.id, dataset_id(&example_bytes()));
    let (st, b) = get(&app, &format!("/datasets/{}", s.id)).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(parse::<DatasetSummary>(&b), s);
    assert_eq!(get(&app, "/datasets/nope").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn upload_five_hundred_lines() {
    let app = router(&config());
    let mut text = String::from("x\n");
    for i in 0..500 {
        text.push_str(&format!("{}\n", 0.5 + i as f64 * 0.01));
    }
    let s = upload(&app, text.clone().into_bytes()).await;
    let lib = read_dataset(text.as_bytes()).unwrap();
    assert_eq!(s.n, 500);
    assert_eq!(s.emp_mean, phasefit_core::gof::empirical_moments(&lib).unwrap().0);
}

#[tokio::test]
async fn multipart_upload() {
    let app = router(&config());
    let boundary = "XyZ";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"d.txt\"\r\nContent-Type: text/plain\r\n\r\n"
    )
    .into_bytes();
    body.extend(example_bytes());
    body.extend(format!("\r\n--{boundary}--\r\n").into_bytes());
    let req = Request::post("/datasets")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let (s, b, _) = send(&app, req).await;
    assert_eq!(s, StatusCode::CREATED, "{b}");
    assert_eq!(parse::<DatasetSummary>(&b).id, dataset_id(&example_bytes()));
}

#[tokio::test]
async fn upload_errors() {
    let app = router(&Config { max_upload: 64, ..config() });
    let (s, b) = post(&app, "/datasets", "x\n1,5\n2,5\n").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(b.contains("decimal separator must be '.'"), "{b}");
    let (s, b) = post(&app, "/datasets", "").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse::<ErrorDoc>(&b).error, "empty_dataset");
    let (s, b) = post(&app, "/datasets", vec![b'1'; 65]).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE, "{b}");
}

#[tokio::test]
async fn evaluate_erlang_survival() {
    let app = router(&config());
    let body = "horizon = 1.0\npoints = 2\ncurves = [\"survival\"]\n[model]\nstructure = \"erlang\"\nstates = 2\nrate = 1.0\n";
    let (s, b) = post(&app, "/evaluate", body).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: EvaluateResponse = parse(&b);
    assert_eq!(r.series.len(), 1);
    assert_eq!(r.series[0].x, vec![0.0, 1.0]);
    let y = survival_y(&r);
    assert_eq!(y[0], 1.0);
    assert!((y[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    assert!((y[1] - 0.735759).abs() < 1e-6);
    assert_eq!((r.mean, r.variance), (2.0, 2.0));
}

#[tokio::test]
async fn evaluate_rejects_invalid_models() {
    let app = router(&config());
    let body = "[model]\nstructure = \"hyperexponential\"\nalpha = [0.6, 0.6]\nrates = [1.0, 2.0]\n";
    let (s, b) = post(&app, "/evaluate", body).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(b.contains("alpha must sum to 1"), "{b}");
    let body = "[model]\nstructure = \"erlang\"\nstates = 2\nrate = 1.0\ncut = 0.0\n[model.zone2]\nrate = 2.0\n";
    let (s, b) = post(&app, "/evaluate", body).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(b.contains("cut must be positive"), "{b}");
    let (s, _) = post(&app, "/evaluate", "model = 3").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn evaluate_cut_point_model_json() {
    let app = router(&config());
    let body = r#"{"model": {"structure": "erlang", "states": 2, "rate": 1.0, "cut": 0.5, "zone2": {"rate": 3.0}},
                   "horizon": 1.0, "points": 3}"#;
    let req = Request::post("/evaluate").header(header::CONTENT_TYPE, "application/json").body(Body::from(body)).unwrap();
    let (s, b, h) = send(&app, req).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    assert_eq!(h[header::CONTENT_TYPE], "application/json");
    let r: EvaluateResponse = serde_json::from_str(&b).unwrap();
    let pdf = &r.series[0];
    assert_eq!(pdf.x, vec![0.0, 0.5, 0.5, 1.0]);
    assert!(pdf.y[2].0 > pdf.y[1].0);
}

fn fit_body(id: &str, extra: &str) -> String {
    format!("dataset = \"{id}\"\n{extra}\n")
}

fn small_opts() -> FitOptions {
    FitOptions { restarts: 2, ..FitOptions::default() }
}

#[tokio::test]
async fn point_fit_matches_library() {
    let app = router(&config());
    let id = upload(&app, example_bytes()).await.id;
    let body = fit_body(&id, "method = \"point\"\nstructure = \"general\"\nstates = 2\nrestarts = 2\nseed = 3");
    let (s, b) = post(&app, "/fit", body.clone()).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: FitResponse = parse(&b);
    let data = read_dataset(&example_bytes()[..]).unwrap();
    let lib = em_fit_point(&data, StructureKind::General, 2, &FitOptions { seed: 3, ..small_opts() }).unwrap();
    assert_eq!(r.entry.fit.loglik, lib.loglik);
    assert_eq!(r.entry.fit.to_result().unwrap(), lib);
    let gof = r.entry.gof.as_ref().unwrap();
    assert!((0.0..=1.0).contains(&gof.p_value));
    assert_eq!(r.series.len(), 4);
    assert_eq!(r.empirical.x.len(), 9);
    assert_eq!(post(&app, "/fit", body).await.1, b);
}

#[tokio::test]
async fn fit_request_errors() {
    let app = router(&config());
    let id = upload(&app, example_bytes()).await.id;
    let (s, _) = post(&app, "/fit", fit_body(&id, "method = \"point\"\nstructure = \"erlang\"\nstates = 0")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, "/fit", fit_body("missing", "method = \"point\"\nstructure = \"erlang\"\nstates = 1")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, b) = post(&app, "/fit", fit_body(&id, "method = \"group\"\nstructure = \"erlang\"\nstates = 1")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(b.contains("edges"), "{b}");
    let (s, _) = post(&app, "/fit", fit_body(&id, "method = \"guess\"\nstructure = \"erlang\"\nstates = 1")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(get(&app, "/jobs/job-77").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/nowhere").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn group_fit_with_edges_matches_library() {
    let app = router(&config());
    let id = upload(&app, example_bytes()).await.id;
    let extra = "method = \"group\"\nstructure = \"erlang\"\nstates = 2\nrestarts = 2\nedges = [0.0, 0.1, 0.2, 0.4, \"inf\"]";
    let (s, b) = post(&app, "/fit", fit_body(&id, extra)).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: FitResponse = parse(&b);
    let data = read_dataset(&example_bytes()[..]).unwrap();
    let g = GroupedDataset::from_dataset(&data, vec![0.0, 0.1, 0.2, 0.4, f64::INFINITY]).unwrap();
    let lib = em_fit_group(&g, StructureKind::Erlang, 2, &small_opts()).unwrap();
    assert_eq!(r.entry.fit.to_result().unwrap(), lib);
    assert_eq!(r.entry.fit.method, "group");
}

#[tokio::test]
async fn density_fit_matches_library() {
    let app = router(&config());
    let id = upload(&app, example_bytes()).await.id;
    let extra = "method = \"density\"\nstructure = \"erlang\"\nstates = 3\nrestarts = 2\ntarget = \"erlang:3,2\"\nnodes = 48";
    let (s, b) = post(&app, "/fit", fit_body(&id, extra)).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: FitResponse = parse(&b);
    let t = Target::Erlang { shape: 3, rate: 2.0 };
    let lib = fit_density(&|x| t.pdf(x), t.default_horizon().unwrap(), 48, StructureKind::Erlang, 3, &small_opts()).unwrap();
    assert_eq!(r.entry.fit.to_result().unwrap(), lib);
}

async fn poll(app: &Router, job: &str) -> JobStatus {
    for _ in 0..1200 {
        let (s, b) = get(app, &format!("/jobs/{job}")).await;
        assert_eq!(s, StatusCode::OK);
        let st: JobStatus = parse(&b);
        if st.state != JobState::Running {
            return st;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    panic!("job {job} did not finish");
}

#[tokio::test]
async fn async_mode_matches_sync_result() {
    let app = router(&config());
    let id = upload(&app, example_bytes()).await.id;
    let base = "method = \"point\"\nstructure = \"cf1\"\nstates = 3\nrestarts = 2";
    let (s, b) = post(&app, "/fit", fit_body(&id, &format!("{base}\nmode = \"async\""))).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{b}");
    let accepted: JobAccepted = parse(&b);
    let done = poll(&app, &accepted.job).await;
    assert_eq!(done.state, JobState::Done);
    assert!(done.iterations > 0);
    let (_, sync) = post(&app, "/fit", fit_body(&id, &format!("{base}\nmode = \"sync\""))).await;
    assert_eq!(done.result.unwrap(), parse::<FitResponse>(&sync));
}

#[tokio::test]
async fn rotterdam_general_three_runs_as_job() {
    let app = router(&Config { threads: 4, ..Config::default() });
    let s = upload(&app, rotterdam_bytes()).await;
    assert_eq!(s.n, 1077);
    let body = fit_body(&s.id, "method = \"point\"\nstructure = \"general\"\nstates = 3");
    let req = Request::post("/fit").body(Body::from(body)).unwrap();
    let (st, b, h) = send(&app, req).await;
    assert_eq!(st, StatusCode::ACCEPTED, "{b}");
    let accepted: JobAccepted = parse(&b);
    assert_eq!(h[header::LOCATION], format!("/jobs/{}", accepted.job));
    assert!(accepted.estimated_seconds > 1.0);
    let done = poll(&app, &accepted.job).await;
    let fit = done.result.unwrap().entry.fit;
    assert!((fit.loglik + 8912.38).abs() < 5.0, "{}", fit.loglik);
    assert!(done.best_loglik >= fit.loglik);
}

#[tokio::test]
async fn rotterdam_cut_point_beats_erlang() {
    let app = router(&config());
    let id = upload(&app, rotterdam_bytes()).await.id;
    let (s, b) = post(&app, "/fit-ocp/compare", format!("dataset = \"{id}\"\nstates = 2\ncut = 3250.0\n")).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: CompareResponse = parse(&b);
    assert!(r.ocp.fit.aic < r.erlang.fit.aic, "{} {}", r.ocp.fit.aic, r.erlang.fit.aic);
    assert!((r.ocp.fit.aic - 17834.67).abs() < 5.0);
    let lib = phasefit_core::gof::empirical_cum_hazard(&read_dataset(&rotterdam_bytes()[..]).unwrap());
    assert_eq!(r.empirical.x, lib.iter().map(|p| p.0).collect::<Vec<_>>());
    assert_eq!(r.ocp_series.len(), 4);
    let (s, b) = post(&app, "/fit-ocp/compare", format!("dataset = \"{id}\"\nstates = 2\ncut = 1e6\n")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse::<ErrorDoc>(&b).error, "invalid_cut_point");
}

#[tokio::test]
async fn homogeneous_data_gives_similar_zone_rates() {
    let app = router(&config());
    let exp = phasefit_core::phd::StructureSpec::Exponential { rate: 1.0 }.build().unwrap();
    let mut text = String::from("t\n");
    for x in exp.sample(3000, 11) {
        text.push_str(&format!("{x}\n"));
    }
    let id = upload(&app, text.into_bytes()).await.id;
    let (s, b) = post(&app, "/fit-ocp/compare", format!("dataset = \"{id}\"\nstates = 1\ncut = 1.0\n")).await;
    assert_eq!(s, StatusCode::OK, "{b}");
    let r: CompareResponse = parse(&b);
    let t = &r.ocp.fit.model;
    let (l1, l2) = (-t.t[0][0], -t.t2.as_ref().unwrap()[0][0]);
    assert!((l1 - l2).abs() < 0.15, "{l1} {l2}");
    let (p1, p2) = (r.erlang.gof.unwrap().p_value, r.ocp.gof.unwrap().p_value);
    assert!(p1 > 0.01 && p2 > 0.01, "{p1} {p2}");
}

#[tokio::test]
async fn cors_headers_present() {
    let app = router(&config());
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/evaluate")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let (_, _, h) = send(&app, req).await;
    assert_eq!(h[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test]
async fn serves_over_tcp() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let cfg = config();
    let server = tokio::spawn(async move { serve_on(listener, &cfg).await });
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream.write_all(b"GET /jobs/job-1 HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).await.unwrap();
    assert!(reply.starts_with("HTTP/1.1 404"), "{reply}");
    server.abort();
}
