//! Maximum-likelihood fitting: EM for classical models on point, grouped and
//! density data, and fixed cut-point fitting with Erlang zones.

mod estep;
mod hyper;
mod mstep;
mod nelder_mead;
mod ocp_fit;
mod quadrature;
mod sweep;
mod target;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use nelder_mead::{nelder_mead, Simplex};
pub use ocp_fit::fit_ocp;
pub use quadrature::gauss_legendre;
pub use target::Target;
pub use sweep::{decile_cuts, scan_cut_points, sweep_states, CutScanRow, ParametricRefit, SweepRow, SweepSummary};

use crate::dataio::{Dataset, GroupedDataset};
use crate::error::{Error, Result};
use crate::lifetime::Lifetime;
use crate::ocp::OneCutPointPhaseType;
use crate::phd::{PhaseType, StructureKind, MAX_STATES};
use crate::scalar::KahanSum;
use mstep::Shape;

/// EM control knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain drops below this.
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 2000, rel_tol: 1e-8, restarts: 5, seed: 0 }
    }
}

impl FitOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidSpec("max_iter must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidSpec("rel_tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidSpec("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitMethod {
    Point,
    Group,
    Density,
    OneCutPoint,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::Point => "point",
            FitMethod::Group => "group",
            FitMethod::Density => "density",
            FitMethod::OneCutPoint => "one_cut_point",
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "point" => Ok(FitMethod::Point),
            "group" | "grouped" => Ok(FitMethod::Group),
            "density" => Ok(FitMethod::Density),
            "one_cut_point" | "ocp" => Ok(FitMethod::OneCutPoint),
            _ => Err(Error::InvalidSpec(format!("unknown fit method '{s}'"))),
        }
    }
}

/// Either kind of fitted model.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Classical(PhaseType),
    OneCutPoint(OneCutPointPhaseType),
}

impl FittedModel {
    pub fn kind(&self) -> StructureKind {
        match self {
            FittedModel::Classical(p) => p.kind(),
            FittedModel::OneCutPoint(p) => p.kind(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            FittedModel::Classical(p) => p.order(),
            FittedModel::OneCutPoint(p) => p.order(),
        }
    }

    pub fn default_horizon(&self) -> Result<f64> {
        match self {
            FittedModel::Classical(p) => p.default_horizon(),
            FittedModel::OneCutPoint(p) => p.default_horizon(),
        }
    }

    pub fn as_lifetime(&self) -> &(dyn Lifetime + Sync) {
        match self {
            FittedModel::Classical(p) => p,
            FittedModel::OneCutPoint(p) => p,
        }
    }
}

impl Lifetime for FittedModel {
    fn pdf(&self, x: f64) -> Result<f64> {
        self.as_lifetime().pdf(x)
    }
    fn survival(&self, x: f64) -> Result<f64> {
        self.as_lifetime().survival(x)
    }
    fn hazard(&self, x: f64) -> Result<f64> {
        self.as_lifetime().hazard(x)
    }
    fn cum_hazard(&self, x: f64) -> Result<f64> {
        self.as_lifetime().cum_hazard(x)
    }
    fn moments(&self) -> Result<(f64, f64)> {
        self.as_lifetime().moments()
    }
    fn discontinuity(&self) -> Option<f64> {
        self.as_lifetime().discontinuity()
    }
    fn right_limits(&self) -> Option<(f64, Result<f64>)> {
        self.as_lifetime().right_limits()
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.as_lifetime().sample(n, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: FitMethod,
    pub model: FittedModel,
    pub loglik: f64,
    pub aic: f64,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    pub loglik_trace: Vec<f64>,
    pub seed: u64,
}

impl FitResult {
    pub fn structure(&self) -> StructureKind {
        self.model.kind()
    }

    pub fn states(&self) -> usize {
        self.model.order()
    }
}

/// Live progress of a running fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub restart: usize,
    pub iteration: usize,
    pub loglik: f64,
}

pub type ProgressFn<'a> = &'a (dyn Fn(Progress) + Sync);

fn silent(_: Progress) {}

/// `Σᵢ wᵢ ln f(xᵢ)`; `−∞` as soon as one density underflows to zero.
pub fn loglik(model: &(impl Lifetime + ?Sized), data: &Dataset) -> f64 {
    let mut acc = KahanSum::new();
    for (&x, &w) in data.values().iter().zip(data.weights()) {
        match model.pdf(x) {
            Ok(f) if f > 0.0 => acc.add(w * f.ln()),
            _ => return f64::NEG_INFINITY,
        }
    }
    acc.value()
}

/// `2k − 2·loglik`.
pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub(crate) fn shape_for(structure: StructureKind, m: usize) -> Result<Shape> {
    if m == 0 || m > MAX_STATES {
        return Err(Error::InvalidSpec(format!("number of states must be in 1..={MAX_STATES}, got {m}")));
    }
    match structure {
        StructureKind::General => Ok(Shape::General),
        StructureKind::Cf1 => Ok(Shape::Cf1),
        StructureKind::Erlang => Ok(Shape::Erlang),
        StructureKind::HyperErlang => Ok(Shape::HyperErlang(vec![m])),
        other => Err(Error::InvalidSpec(format!(
            "structure '{other}' cannot be fitted; use general, cf1, hyper_erlang or erlang"
        ))),
    }
}

/// One EM trajectory.
#[derive(Debug, Clone)]
pub(crate) struct Run {
    pub model: PhaseType,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Run {
    pub fn loglik(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

pub(crate) fn run_em(
    init: PhaseType,
    shape: &Shape,
    estep: &dyn Fn(&PhaseType) -> estep::Stats,
    opts: &FitOptions,
    report: &dyn Fn(usize, f64),
) -> Run {
    let mut model = init;
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let stats = estep(&model);
        let prev = trace.last().copied();
        trace.push(stats.loglik);
        report(iterations, stats.loglik);
        if !stats.loglik.is_finite() {
            break;
        }
        if let Some(prev) = prev {
            if stats.loglik - prev <= opts.rel_tol * prev.abs() {
                converged = true;
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        match shape.update(&model, &stats) {
            Ok(next) => model = next,
            Err(_) => break,
        }
        iterations += 1;
    }
    Run { model, trace, iterations, converged }
}

/// Index of the best run; ties keep the earliest.
pub(crate) fn best_run(runs: &[Run]) -> usize {
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.loglik() > runs[best].loglik() {
            best = i;
        }
    }
    best
}

pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn restarts_for(shape: &Shape, opts: &FitOptions) -> usize {
    match shape {
        Shape::Erlang => 1,
        _ => opts.restarts,
    }
}

/// Best of the seeded restarts for a fixed shape.
pub(crate) fn fit_shape(
    shape: &Shape,
    m: usize,
    mean: f64,
    estep: &(dyn Fn(&PhaseType) -> estep::Stats + Sync),
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<Run> {
    let runs: Vec<Result<Run>> = (0..restarts_for(shape, opts))
        .into_par_iter()
        .map(|restart| {
            let mut rng = restart_rng(opts.seed, restart);
            let init = shape.initial(m, mean, restart, &mut rng)?;
            let report = |iteration, loglik| progress(Progress { restart, iteration, loglik });
            Ok(run_em(init, shape, estep, opts, &report))
        })
        .collect();
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let best = best_run(&runs);
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

fn finish(method: FitMethod, run: Run, n_params: usize, opts: &FitOptions) -> FitResult {
    let loglik = run.loglik();
    FitResult {
        method,
        model: FittedModel::Classical(run.model),
        loglik,
        aic: aic(loglik, n_params),
        n_params,
        iterations: run.iterations,
        converged: run.converged,
        loglik_trace: run.trace,
        seed: opts.seed,
    }
}

/// EM on exact (optionally weighted) observations.
pub fn em_fit_point(data: &Dataset, structure: StructureKind, m: usize, opts: &FitOptions) -> Result<FitResult> {
    em_fit_point_with_progress(data, structure, m, opts, &silent)
}

pub fn em_fit_point_with_progress(
    data: &Dataset,
    structure: StructureKind,
    m: usize,
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<FitResult> {
    fit_point_as(FitMethod::Point, data, structure, m, opts, progress)
}

fn fit_point_as(
    method: FitMethod,
    data: &Dataset,
    structure: StructureKind,
    m: usize,
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<FitResult> {
    opts.validate()?;
    let shape = shape_for(structure, m)?;
    let obs = data.sorted_merged();
    let mean = data.mean();
    if let Shape::HyperErlang(_) = shape {
        let (shapes, run) = hyper::fit_point(&obs, m, mean, opts, progress)?;
        return Ok(finish(method, run, Shape::HyperErlang(shapes).n_params(m), opts));
    }
    let estep = |ph: &PhaseType| estep::point(ph, &obs);
    let run = fit_shape(&shape, m, mean, &estep, opts, progress)?;
    Ok(finish(method, run, shape.n_params(m), opts))
}

/// EM on binned counts with optional right truncation.
pub fn em_fit_group(data: &GroupedDataset, structure: StructureKind, m: usize, opts: &FitOptions) -> Result<FitResult> {
    em_fit_group_with_progress(data, structure, m, opts, &silent)
}

pub fn em_fit_group_with_progress(
    data: &GroupedDataset,
    structure: StructureKind,
    m: usize,
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<FitResult> {
    opts.validate()?;
    let shape = shape_for(structure, m)?;
    let mean = data.approximate_mean();
    let estep = |ph: &PhaseType| estep::grouped(ph, data);
    if let Shape::HyperErlang(_) = shape {
        let fit = |shapes: &[usize]| {
            fit_shape(&Shape::HyperErlang(shapes.to_vec()), m, mean, &estep, opts, progress)
        };
        let (shapes, run) = hyper::search(m, &fit)?;
        return Ok(finish(FitMethod::Group, run, Shape::HyperErlang(shapes).n_params(m), opts));
    }
    let run = fit_shape(&shape, m, mean, &estep, opts, progress)?;
    Ok(finish(FitMethod::Group, run, shape.n_params(m), opts))
}

/// Weighted points `(xⱼ, f(xⱼ)·wⱼ)` from a Gauss–Legendre rule on `[0, horizon]`.
pub fn density_points(target: &dyn Fn(f64) -> f64, horizon: f64, nodes: usize) -> Result<Dataset> {
    if nodes < 8 {
        return Err(Error::InvalidSpec(format!("density quadrature needs at least 8 nodes, got {nodes}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    let (x, w) = gauss_legendre(nodes);
    let half = 0.5 * horizon;
    let mut values = Vec::with_capacity(nodes);
    let mut weights = Vec::with_capacity(nodes);
    let mut mass = KahanSum::new();
    for (i, (&xi, &wi)) in x.iter().zip(&w).enumerate() {
        let t = half * (xi + 1.0);
        let f = target(t);
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::data(i, format!("target density is {f} at x = {t}")));
        }
        let weight = f * wi * half;
        mass.add(weight);
        if weight > 0.0 {
            values.push(t);
            weights.push(weight);
        }
    }
    let mass = mass.value();
    if mass < 0.9 {
        return Err(Error::HorizonTooSmall { mass, horizon });
    }
    Dataset::weighted(values, weights)
}

/// EM on quadrature points of a target density.
pub fn fit_density(
    target: &dyn Fn(f64) -> f64,
    horizon: f64,
    nodes: usize,
    structure: StructureKind,
    m: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_density_with_progress(target, horizon, nodes, structure, m, opts, &silent)
}

pub fn fit_density_with_progress(
    target: &dyn Fn(f64) -> f64,
    horizon: f64,
    nodes: usize,
    structure: StructureKind,
    m: usize,
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<FitResult> {
    let data = density_points(target, horizon, nodes)?;
    fit_point_as(FitMethod::Density, &data, structure, m, opts, progress)
}

/// One more EM step from `model` on point data; returns the new log-likelihood.
pub fn em_step_point(model: &PhaseType, data: &Dataset) -> Result<f64> {
    let shape = match model.kind() {
        StructureKind::HyperErlang => Shape::HyperErlang(hyper::branch_shapes(model)),
        k => shape_for(k, model.order())?,
    };
    let obs = data.sorted_merged();
    let next = shape.update(model, &estep::point(model, &obs))?;
    Ok(estep::point(&next, &obs).loglik)
}
