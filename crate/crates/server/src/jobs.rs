//! Background fits and the bounded worker pool.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};

use phasefit_core::fit::Progress;
use tokio::sync::oneshot;

use crate::error::{ApiError, ErrorDoc};
use crate::wire::{FitResponse, JobState, JobStatus};

/// Finished jobs kept for polling.
const RETAINED: usize = 256;

/// Runs blocking work on a fixed number of threads.
pub struct Pool {
    pool: rayon::ThreadPool,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> ApiError {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".into());
    ApiError::internal(msg)
}

impl Pool {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .thread_name(|i| format!("phasefit-worker-{i}"))
            .build()
            .expect("worker pool");
        Self { pool }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f` on the pool and waits for it without blocking the runtime.
    pub async fn run<T: Send + 'static>(&self, f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
        let (tx, rx) = oneshot::channel();
        self.pool.spawn(move || {
            let _ = tx.send(catch_unwind(AssertUnwindSafe(f)));
        });
        match rx.await {
            Ok(Ok(v)) => Ok(v),
            Ok(Err(p)) => Err(panic_message(p)),
            Err(_) => Err(ApiError::internal("worker dropped the job")),
        }
    }

    /// Fire and forget; panics are reported through `on_panic`.
    pub fn spawn(&self, f: impl FnOnce() + Send + 'static, on_panic: impl FnOnce(ApiError) + Send + 'static) {
        self.pool.spawn(move || {
            if let Err(p) = catch_unwind(AssertUnwindSafe(f)) {
                on_panic(panic_message(p));
            }
        });
    }
}

struct Record {
    state: JobState,
    iterations: usize,
    loglik: f64,
    best: f64,
    result: Option<FitResponse>,
    error: Option<ErrorDoc>,
}

pub struct Job {
    record: Mutex<Record>,
}

impl Job {
    fn new() -> Self {
        Self {
            record: Mutex::new(Record {
                state: JobState::Running,
                iterations: 0,
                loglik: f64::NEG_INFINITY,
                best: f64::NEG_INFINITY,
                result: None,
                error: None,
            }),
        }
    }

    pub fn progress(&self, p: Progress) {
        let mut r = self.record.lock().unwrap();
        r.iterations += 1;
        r.loglik = p.loglik;
        if p.loglik > r.best {
            r.best = p.loglik;
        }
    }

    pub fn finish(&self, outcome: Result<FitResponse, ApiError>) {
        let mut r = self.record.lock().unwrap();
        match outcome {
            Ok(res) => {
                r.state = JobState::Done;
                r.loglik = res.entry.fit.loglik;
                r.best = r.best.max(res.entry.fit.loglik);
                r.result = Some(res);
            }
            Err(e) => {
                r.state = JobState::Failed;
                r.error = Some(e.doc);
            }
        }
    }

    pub fn status(&self, id: &str) -> JobStatus {
        let r = self.record.lock().unwrap();
        JobStatus {
            job: id.to_string(),
            state: r.state,
            iterations: r.iterations,
            loglik: r.loglik,
            best_loglik: r.best,
            result: r.result.clone(),
            error: r.error.clone(),
        }
    }

    fn finished(&self) -> bool {
        self.record.lock().unwrap().state != JobState::Running
    }
}

#[derive(Default)]
struct Table {
    next: u64,
    jobs: BTreeMap<u64, Arc<Job>>,
}

#[derive(Default)]
pub struct Jobs {
    table: Mutex<Table>,
}

impl Jobs {
    pub fn create(&self) -> (String, Arc<Job>) {
        let mut t = self.table.lock().unwrap();
        if t.jobs.len() >= RETAINED {
            let done: Vec<u64> = t.jobs.iter().filter(|(_, j)| j.finished()).map(|(&k, _)| k).collect();
            for k in done.into_iter().take(t.jobs.len() + 1 - RETAINED) {
                t.jobs.remove(&k);
            }
        }
        t.next += 1;
        let key = t.next;
        let job = Arc::new(Job::new());
        t.jobs.insert(key, job.clone());
        (format!("job-{key}"), job)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        let key: u64 = id.strip_prefix("job-")?.parse().ok()?;
        self.table.lock().unwrap().jobs.get(&key).cloned()
    }
}
