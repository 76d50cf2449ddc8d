//! State-count sweeps, cut-point scans and the parametric-bootstrap refit.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::{em_fit_point, fit_ocp, FitOptions, FitResult, FittedModel};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::gof::{ad_statistic, gof_report, GoFReport, PValueMethod, Refit};
use crate::lifetime::Lifetime;
use crate::phd::{StructureKind, MAX_STATES};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub fit: FitResult,
    pub gof: GoFReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub structure: StructureKind,
    pub m: usize,
    pub outcome: Result<SweepSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutScanRow {
    pub cut: f64,
    pub outcome: Result<SweepSummary>,
}

fn structure_rank(s: StructureKind) -> usize {
    StructureKind::ALL.iter().position(|&k| k == s).unwrap_or(usize::MAX)
}

fn summarize(data: &Dataset, fit: Result<FitResult>) -> Result<SweepSummary> {
    let fit = fit?;
    let gof = gof_report(data, &fit.model, PValueMethod::Asymptotic, None)?;
    Ok(SweepSummary { fit, gof })
}

/// Point-data fits for every `(structure, m)`, rows ordered by `(m, structure)`.
pub fn sweep_states(
    data: &Dataset,
    structures: &[StructureKind],
    m_range: RangeInclusive<usize>,
    opts: &FitOptions,
) -> Result<Vec<SweepRow>> {
    if *m_range.start() < 1 || *m_range.end() > MAX_STATES {
        return Err(Error::InvalidSpec(format!("state range must lie within 1..={MAX_STATES}")));
    }
    let mut structures = structures.to_vec();
    structures.sort_by_key(|&s| structure_rank(s));
    structures.dedup();
    let cells: Vec<(usize, StructureKind)> =
        m_range.flat_map(|m| structures.iter().map(move |&s| (m, s))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(m, structure)| SweepRow {
            structure,
            m,
            outcome: summarize(data, em_fit_point(data, structure, m, opts)),
        })
        .collect())
}

/// Type-7 sample quantile.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Deciles `10%, …, 90%` of the data.
pub fn decile_cuts(data: &Dataset) -> Vec<f64> {
    let mut v = data.values().to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    (1..10).map(|k| quantile(&v, k as f64 / 10.0)).collect()
}

/// One cut-point fit per candidate (deciles when `candidates` is `None`).
pub fn scan_cut_points(data: &Dataset, m: usize, candidates: Option<&[f64]>, opts: &FitOptions) -> Vec<CutScanRow> {
    let cuts = candidates.map_or_else(|| decile_cuts(data), <[f64]>::to_vec);
    cuts.into_par_iter()
        .map(|cut| CutScanRow { cut, outcome: summarize(data, fit_ocp(data, m, cut, opts)) })
        .collect()
}

/// Simulates from a fitted result and refits with the same settings.
pub struct ParametricRefit<'a> {
    pub fit: &'a FitResult,
    pub opts: FitOptions,
}

impl Refit for ParametricRefit<'_> {
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.fit.model.sample(n, seed)
    }

    fn refit_statistic(&self, sample: &[f64]) -> Result<f64> {
        let data = Dataset::new(sample.to_vec())?;
        let refit = match &self.fit.model {
            FittedModel::Classical(p) => em_fit_point(&data, p.kind(), p.order(), &self.opts)?,
            FittedModel::OneCutPoint(p) => fit_ocp(&data, p.order(), p.cut(), &self.opts)?,
        };
        let model = &refit.model;
        ad_statistic(&data, &|x| model.cdf(x).unwrap_or(f64::NAN))
    }
}
