//! Fixed cut-point fitting with Erlang zones, `α = (1, 0, …, 0)`.
//!
//! For `y ≤ a` the density is Erlang(m, λ₁). Past the cut the chain sits in
//! phase `j` with probability `Pois(j; λ₁a)` and needs `m − j` more phases at
//! rate `λ₂`, so `f(y) = Σⱼ Pois(j; λ₁a)·Erlang(m − j, λ₂)(y − a)`.

use super::{aic, nelder_mead, FitMethod, FitOptions, FitResult, FittedModel};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::ocp::OneCutPointPhaseType;
use crate::scalar::KahanSum;

const SIMPLEX_STEP: f64 = 0.1;
const TOLERANCE: f64 = 1e-10;
const MAX_ITER: usize = 5000;
const MAX_REFRESH: usize = 10;

struct Objective<'a> {
    data: &'a Dataset,
    m: usize,
    cut: f64,
    ln_fact: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(data: &'a Dataset, m: usize, cut: f64) -> Self {
        let mut ln_fact = vec![0.0; m + 1];
        for k in 1..=m {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        Self { data, m, cut, ln_fact }
    }

    fn ln_erlang(&self, k: usize, rate: f64, s: f64) -> f64 {
        k as f64 * rate.ln() + (k as f64 - 1.0) * s.ln() - rate * s - self.ln_fact[k - 1]
    }

    fn loglik(&self, l1: f64, l2: f64) -> f64 {
        let mu = l1 * self.cut;
        let ln_pois: Vec<f64> =
            (0..self.m).map(|j| j as f64 * mu.ln() - mu - self.ln_fact[j]).collect();
        let mut acc = KahanSum::new();
        let mut terms = vec![0.0; self.m];
        for (&y, &w) in self.data.values().iter().zip(self.data.weights()) {
            let lf = if y <= self.cut {
                self.ln_erlang(self.m, l1, y)
            } else {
                let s = y - self.cut;
                for j in 0..self.m {
                    terms[j] = ln_pois[j] + self.ln_erlang(self.m - j, l2, s);
                }
                let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    top
                } else {
                    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
                }
            };
            acc.add(w * lf);
        }
        let v = acc.value();
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

fn zone_start(values: impl Iterator<Item = (f64, f64)>, m: usize, fallback: f64) -> f64 {
    let (mut sw, mut swx) = (0.0, 0.0);
    for (x, w) in values {
        sw += w;
        swx += w * x;
    }
    if sw > 0.0 && swx > 0.0 {
        m as f64 * sw / swx
    } else {
        fallback
    }
}

/// Maximizes the objective without checking the cut against the data.
pub(crate) fn optimize(data: &Dataset, m: usize, cut: f64) -> (f64, f64, f64, usize, bool, Vec<f64>) {
    let obj = Objective::new(data, m, cut);
    let pairs = || data.values().iter().copied().zip(data.weights().iter().copied());
    let overall = m as f64 / data.mean();
    let l1 = zone_start(pairs().filter(|p| p.0 <= cut), m, overall);
    let l2 = zone_start(pairs().filter(|p| p.0 > cut).map(|(y, w)| (y - cut, w)), m, overall);
    let f = |p: &[f64]| -obj.loglik(p[0].exp(), p[1].exp());

    let mut start = vec![l1.ln(), l2.ln()];
    if f(&[overall.ln(), overall.ln()]) < f(&start) {
        start = vec![overall.ln(), overall.ln()];
    }
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut best = nelder_mead(&f, &start, SIMPLEX_STEP, TOLERANCE, MAX_ITER);
    iterations += best.iterations;
    trace.extend(best.trace.iter().map(|v| -v));
    // restart from the optimum until the simplex stops finding improvements
    for _ in 0..MAX_REFRESH {
        let again = nelder_mead(&f, &best.best, SIMPLEX_STEP, TOLERANCE, MAX_ITER);
        iterations += again.iterations;
        let gain = best.value - again.value;
        if again.value < best.value {
            trace.extend(again.trace.iter().map(|v| -v));
            best = again;
        }
        if gain <= TOLERANCE {
            break;
        }
    }
    (best.best[0].exp(), best.best[1].exp(), -best.value, iterations, best.converged, trace)
}

/// Fits `λ₁, λ₂` for a user-chosen cut `a` strictly inside the data range.
pub fn fit_ocp(data: &Dataset, m: usize, cut: f64, opts: &FitOptions) -> Result<FitResult> {
    if m == 0 || m > crate::phd::MAX_STATES {
        return Err(Error::InvalidSpec(format!("number of states must be in 1..={}, got {m}", crate::phd::MAX_STATES)));
    }
    let (min, max) = (data.min(), data.max());
    if !(cut > min && cut < max) {
        return Err(Error::InvalidCutPoint { cut, min, max });
    }
    let below = data.values().iter().filter(|&&y| y <= cut).count();
    let above = data.len() - below;
    if below < m || above < m {
        return Err(Error::InsufficientData(format!(
            "{below} observations at or below the cut and {above} above; each side needs at least {m}"
        )));
    }
    let (l1, l2, loglik, iterations, converged, trace) = optimize(data, m, cut);
    let model = OneCutPointPhaseType::erlang(m, l1, l2, cut)?;
    Ok(FitResult {
        method: FitMethod::OneCutPoint,
        model: FittedModel::OneCutPoint(model),
        loglik,
        aic: aic(loglik, 2),
        n_params: 2,
        iterations,
        converged,
        loglik_trace: trace,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::loglik;

    #[test]
    fn objective_matches_model_density() {
        let data = Dataset::new(vec![0.2, 0.7, 1.3, 2.2, 3.1, 0.05]).unwrap();
        for m in [1, 2, 4] {
            let obj = Objective::new(&data, m, 1.0);
            let model = OneCutPointPhaseType::erlang(m, 1.7, 0.6, 1.0).unwrap();
            let direct = loglik(&model, &data);
            assert!((obj.loglik(1.7, 0.6) - direct).abs() < 1e-11 * direct.abs(), "m={m}");
        }
    }

    #[test]
    fn cut_beyond_data_reduces_to_erlang() {
        let data = Dataset::new(vec![0.4, 1.1, 1.9, 2.6, 0.8, 3.3, 1.4]).unwrap();
        let m = 2;
        let (l1, _, ll, _, _, _) = optimize(&data, m, 10.0);
        let mle = m as f64 * data.len() as f64 / data.values().iter().sum::<f64>();
        assert!((l1 - mle).abs() < 1e-4 * mle);
        let obj = Objective::new(&data, m, 10.0);
        assert!((ll - obj.loglik(mle, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn preconditions() {
        let data = Dataset::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let o = FitOptions::default();
        assert!(matches!(fit_ocp(&data, 1, 5.0, &o), Err(Error::InvalidCutPoint { .. })));
        assert!(matches!(fit_ocp(&data, 1, 1.0, &o), Err(Error::InvalidCutPoint { .. })));
        assert!(matches!(fit_ocp(&data, 3, 2.5, &o), Err(Error::InsufficientData(_))));
        let r = fit_ocp(&data, 2, 2.5, &o).unwrap();
        assert_eq!(r.n_params, 2);
        assert!(r.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
    }
}
