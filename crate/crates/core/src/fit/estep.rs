//! Expected complete-data statistics for the absorbing chain.
//!
//! Point data: forward rows `fₖ = α e^{T xₖ}` over sorted times, backward
//! columns `gₖ = cₖ T⁰ + e^{TΔₖ₊₁} gₖ₊₁` with `cₖ = wₖ / f(xₖ)`, and the
//! convolution `C = Σₖ ∫ e^{T(Δₖ−u)} gₖ fₖ₋₁ e^{Tu} du` accumulated per gap.
//!
//! Grouped data reuses the same sweep with `e` in place of `T⁰` and
//! boundary coefficients `nₖ₊₁/Pₖ₊₁ − nₖ/Pₖ`, plus the tail
//! `r = (Σⱼ wⱼ fⱼ)(−T)⁻¹` for time spent beyond each boundary.

use crate::dataio::GroupedDataset;
use crate::matfun::{Matrix, Uniformized};
use crate::phd::PhaseType;
use crate::scalar::KahanSum;

#[derive(Debug, Clone)]
pub(crate) struct Stats {
    /// Expected number of starts in each state.
    pub b: Vec<f64>,
    /// Expected total sojourn in each state.
    pub z: Vec<f64>,
    /// Expected jumps `i → j`; the diagonal is unused.
    pub n: Matrix<f64>,
    /// Expected absorptions from each state.
    pub exit: Vec<f64>,
    pub loglik: f64,
}

impl Stats {
    fn degenerate(m: usize) -> Self {
        Self {
            b: vec![0.0; m],
            z: vec![0.0; m],
            n: Matrix::zeros(m),
            exit: vec![0.0; m],
            loglik: f64::NEG_INFINITY,
        }
    }

    /// Expected departures from each state, to any destination.
    pub fn outflow(&self) -> Vec<f64> {
        let m = self.b.len();
        (0..m)
            .map(|i| (0..m).filter(|&j| j != i).map(|j| self.n[(i, j)]).sum::<f64>() + self.exit[i])
            .collect()
    }

    fn finish(ph: &PhaseType, g0: &[f64], conv: &Matrix<f64>, tail: Option<&[f64]>, exit_weight: &[f64], loglik: f64) -> Self {
        let m = ph.order();
        let t = ph.subgen();
        let r = |i: usize| tail.map_or(0.0, |r| r[i]);
        let b = (0..m).map(|i| (ph.alpha()[i] * g0[i]).max(0.0)).collect();
        let z = (0..m).map(|i| (conv[(i, i)] + r(i)).max(0.0)).collect();
        let mut n = Matrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    n[(i, j)] = (t[(i, j)] * (conv[(j, i)] + r(i))).max(0.0);
                }
            }
        }
        let exit = (0..m).map(|i| (ph.exit()[i] * exit_weight[i]).max(0.0)).collect();
        Self { b, z, n, exit, loglik }
    }
}

/// E-step on sorted, merged `(x, w)` pairs.
pub(crate) fn point(ph: &PhaseType, obs: &[(f64, f64)]) -> Stats {
    let m = ph.order();
    let exit = ph.exit();
    let u = Uniformized::new(ph.subgen());

    let mut fwd: Vec<Vec<f64>> = Vec::with_capacity(obs.len() + 1);
    fwd.push(ph.alpha().to_vec());
    let mut coef = Vec::with_capacity(obs.len());
    let mut ll = KahanSum::new();
    let mut prev = 0.0;
    for &(x, w) in obs {
        let f = u.apply_left(x - prev, &fwd[fwd.len() - 1]);
        prev = x;
        let dens = dot(&f, exit);
        if !(dens > 0.0) || !dens.is_finite() {
            return Stats::degenerate(m);
        }
        ll.add(w * dens.ln());
        coef.push(w / dens);
        fwd.push(f);
    }

    let mut absorbed = vec![0.0; m];
    let mut conv = Matrix::zeros(m);
    let mut g = vec![0.0; m];
    for k in (0..obs.len()).rev() {
        let delta = obs[k].0 - if k == 0 { 0.0 } else { obs[k - 1].0 };
        for i in 0..m {
            g[i] += coef[k] * exit[i];
            absorbed[i] += coef[k] * fwd[k + 1][i];
        }
        u.accumulate_convolution(delta, &g, &fwd[k], 1.0, &mut conv);
        g = u.apply(delta, &g);
    }
    Stats::finish(ph, &g, &conv, None, &absorbed, ll.value())
}

/// E-step for binned counts, with an optional open last interval.
pub(crate) fn grouped(ph: &PhaseType, data: &GroupedDataset) -> Stats {
    let m = ph.order();
    let u = Uniformized::new(ph.subgen());
    let intervals = data.intervals();

    // occupation at every finite boundary
    let mut fb: Vec<Vec<f64>> = vec![ph.alpha().to_vec()];
    for &(lo, hi, _) in &intervals {
        if hi.is_finite() {
            let next = u.apply_left(hi - lo, &fb[fb.len() - 1]);
            fb.push(next);
        }
    }
    let surv: Vec<f64> = fb.iter().map(|f| f.iter().sum()).collect();
    let mut ll = KahanSum::new();
    let mut ratio = Vec::with_capacity(intervals.len());
    for (l, &(_, _, count)) in intervals.iter().enumerate() {
        let upper = surv.get(l + 1).copied().unwrap_or(0.0);
        let p = surv[l] - upper;
        if count == 0 {
            ratio.push(0.0);
            continue;
        }
        if !(p > 0.0) {
            return Stats::degenerate(m);
        }
        ll.add(count as f64 * p.ln());
        ratio.push(count as f64 / p);
    }

    // boundary j is the lower end of interval j and the upper end of interval j−1
    let coef: Vec<f64> = (0..fb.len())
        .map(|j| ratio.get(j).copied().unwrap_or(0.0) - if j > 0 { ratio[j - 1] } else { 0.0 })
        .collect();

    let mut conv = Matrix::zeros(m);
    let mut g = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for j in (0..fb.len()).rev() {
        for i in 0..m {
            g[i] += coef[j];
            weighted[i] += coef[j] * fb[j][i];
        }
        if j > 0 {
            let delta = intervals[j - 1].1 - intervals[j - 1].0;
            u.accumulate_convolution(delta, &g, &fb[j - 1], 1.0, &mut conv);
            g = u.apply(delta, &g);
        }
    }
    let neg = ph.subgen().scaled(-1.0);
    let tail = match neg.lu() {
        Ok(lu) => lu.solve_left(&weighted),
        Err(_) => return Stats::degenerate(m),
    };
    Stats::finish(ph, &g, &conv, Some(&tail), &tail, ll.value())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
