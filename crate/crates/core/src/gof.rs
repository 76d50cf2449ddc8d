//! Anderson–Darling statistic and p-values, Nelson–Aalen cumulative hazard
//! and sample moments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::lifetime::Lifetime;
use crate::scalar::KahanSum;

const U_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PValueKind {
    Asymptotic,
    Bootstrap,
}

impl PValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PValueKind::Asymptotic => "asymptotic",
            PValueKind::Bootstrap => "bootstrap",
        }
    }
}

impl fmt::Display for PValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PValueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(PValueKind::Asymptotic),
            "bootstrap" => Ok(PValueKind::Bootstrap),
            _ => Err(Error::InvalidSpec(format!("unknown p-value method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValueMethod {
    Asymptotic,
    Bootstrap { replicates: usize, seed: u64 },
}

impl PValueMethod {
    pub fn kind(&self) -> PValueKind {
        match self {
            PValueMethod::Asymptotic => PValueKind::Asymptotic,
            PValueMethod::Bootstrap { .. } => PValueKind::Bootstrap,
        }
    }
}

/// Draws from a fitted model and refits it, for parametric bootstrap.
pub trait Refit: Sync {
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<f64>>;
    /// A² of `sample` against the model refitted to it.
    fn refit_statistic(&self, sample: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoFReport {
    pub a2: f64,
    pub p_value: f64,
    pub method: PValueKind,
    pub n: usize,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub model_mean: f64,
    pub model_var: f64,
}

/// A² from probability-integral values; sorts `u` in place.
pub fn ad_statistic_from_u(u: &mut [f64]) -> Result<f64> {
    let n = u.len();
    if n == 0 {
        return Err(Error::data(0, "Anderson-Darling statistic needs at least one observation"));
    }
    for v in u.iter_mut() {
        *v = v.clamp(U_CLAMP, 1.0 - U_CLAMP);
    }
    u.sort_by(|a, b| a.total_cmp(b));
    let mut s = KahanSum::new();
    for i in 0..n {
        let k = (2 * i + 1) as f64;
        s.add(k * (u[i].ln() + (1.0 - u[n - 1 - i]).ln()));
    }
    Ok((-(n as f64) - s.value() / n as f64).max(0.0))
}

/// `A² = −n − (1/n) Σ (2i−1)[ln uᵢ + ln(1 − u₍ₙ₊₁₋ᵢ₎)]` with `uᵢ = F(x₍ᵢ₎)`.
pub fn ad_statistic(data: &Dataset, cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let mut u: Vec<f64> = data.values().iter().map(|&x| cdf(x)).collect();
    ad_statistic_from_u(&mut u)
}

fn adinf(z: f64) -> f64 {
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}

fn errfix(n: f64, x: f64) -> f64 {
    if x > 0.8 {
        return (-130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x) / n;
    }
    let c = 0.01265 + 0.1757 / n;
    if x < c {
        // the small-x branch of the correction is not monotone for small n
        return 0.0;
    }
    let v = (x - c) / (0.8 - c);
    let v = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * v) * v) * v) * v) * v;
    v * (0.04213 + 0.01365 / n) / n
}

/// Case-0 p-value: limiting distribution with the finite-`n` correction.
pub fn ad_pvalue_asymptotic(a2: f64, n: usize) -> f64 {
    if !(a2 > 0.0) {
        return 1.0;
    }
    let x = adinf(a2);
    let cdf = if n > 0 { x + errfix(n as f64, x) } else { x };
    (1.0 - cdf).clamp(0.0, 1.0)
}

fn replicate_seed(root: u64, b: usize) -> u64 {
    // splitmix64 step on root ⊕ index
    let mut z = root ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn ad_pvalue(a2: f64, n: usize, method: PValueMethod, model: Option<&dyn Refit>) -> Result<f64> {
    if !(a2 >= 0.0) {
        return Err(Error::Domain(format!("A² must be non-negative, got {a2}")));
    }
    match method {
        PValueMethod::Asymptotic => Ok(ad_pvalue_asymptotic(a2, n)),
        PValueMethod::Bootstrap { replicates, seed } => {
            let model = model.ok_or(Error::MissingModel)?;
            if replicates < 99 {
                return Err(Error::InvalidSpec(format!("bootstrap needs at least 99 replicates, got {replicates}")));
            }
            let exceed: usize = (0..replicates)
                .into_par_iter()
                .map(|b| {
                    let stat = model
                        .simulate(n, replicate_seed(seed, b))
                        .and_then(|s| model.refit_statistic(&s))
                        .unwrap_or(f64::INFINITY);
                    usize::from(stat >= a2)
                })
                .sum();
            Ok((1 + exceed) as f64 / (replicates + 1) as f64)
        }
    }
}

/// Nelson–Aalen steps `(t, Ĥ(t))` at each distinct time, starting at `(0, 0)`.
pub fn empirical_cum_hazard(data: &Dataset) -> Vec<(f64, f64)> {
    let steps = data.sorted_merged();
    let mut at_risk: f64 = data.total_weight();
    let mut h = 0.0;
    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push((0.0, 0.0));
    for (t, d) in steps {
        h += d / at_risk;
        at_risk -= d;
        out.push((t, h));
    }
    out
}

/// Weighted mean and variance; unit weights give the `n − 1` denominator.
pub fn empirical_moments(data: &Dataset) -> Result<(f64, f64)> {
    if data.len() < 2 {
        return Err(Error::InsufficientData("variance needs at least two observations".into()));
    }
    let mean = data.mean();
    let sw = data.total_weight();
    let sw2: f64 = data.weights().iter().map(|w| w * w).sum();
    let ss: KahanSum = data.values().iter().zip(data.weights()).map(|(x, w)| w * (x - mean) * (x - mean)).collect();
    Ok((mean, ss.value() / (sw - sw2 / sw)))
}

/// A², p-value and moment comparison of `model` against `data`.
pub fn gof_report(
    data: &Dataset,
    model: &(impl Lifetime + ?Sized),
    method: PValueMethod,
    refit: Option<&dyn Refit>,
) -> Result<GoFReport> {
    let mut u = Vec::with_capacity(data.len());
    for &x in data.values() {
        u.push(model.cdf(x)?);
    }
    let a2 = ad_statistic_from_u(&mut u)?;
    let p_value = ad_pvalue(a2, data.len(), method, refit)?;
    let (emp_mean, emp_var) = empirical_moments(data)?;
    let (model_mean, model_var) = model.moments()?;
    Ok(GoFReport { a2, p_value, method: method.kind(), n: data.len(), emp_mean, emp_var, model_mean, model_var })
}
