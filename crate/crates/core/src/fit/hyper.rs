//! Hyper-Erlang fitting: closed-form mixture EM per branch-shape vector and a
//! search over shape vectors.

use super::mstep::Shape;
use super::{restart_rng, FitOptions, Progress, ProgressFn, Run};
use crate::error::Result;
use crate::phd::{ErlangBranch, PhaseType, StructureSpec};
use crate::scalar::KahanSum;

const EXHAUSTIVE_UP_TO: usize = 10;
const MAX_BRANCHES: usize = 3;

/// Partitions of `m` into at most `parts` nonincreasing shapes.
pub(crate) fn partitions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, cap: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        if parts == 0 {
            return;
        }
        for s in (1..=cap.min(rest)).rev() {
            cur.push(s);
            rec(rest - s, s, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, m, parts, &mut Vec::new(), &mut out);
    out
}

/// Shapes reachable by moving one phase between branches or splitting one off.
fn neighbours(shapes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut push = |mut v: Vec<usize>| {
        v.retain(|&s| s > 0);
        v.sort_unstable_by(|a, b| b.cmp(a));
        if !out.contains(&v) && v != shapes {
            out.push(v);
        }
    };
    for i in 0..shapes.len() {
        if shapes[i] < 2 {
            continue;
        }
        for j in 0..shapes.len() {
            if i != j {
                let mut v = shapes.to_vec();
                v[i] -= 1;
                v[j] += 1;
                push(v);
            }
        }
        if shapes.len() < MAX_BRANCHES {
            let mut v = shapes.to_vec();
            v[i] -= 1;
            v.push(1);
            push(v);
        }
    }
    out
}

/// Best shape vector: exhaustive for small `m`, hill climbing otherwise.
pub(crate) fn search(m: usize, fit: &dyn Fn(&[usize]) -> Result<Run>) -> Result<(Vec<usize>, Run)> {
    if m <= EXHAUSTIVE_UP_TO {
        let mut best: Option<(Vec<usize>, Run)> = None;
        for shapes in partitions(m, MAX_BRANCHES) {
            let run = fit(&shapes)?;
            if best.as_ref().is_none_or(|(_, b)| run.loglik() > b.loglik()) {
                best = Some((shapes, run));
            }
        }
        return Ok(best.expect("m ≥ 1 has a partition"));
    }
    let mut shapes = vec![m];
    let mut run = fit(&shapes)?;
    loop {
        let mut improved = false;
        for cand in neighbours(&shapes) {
            let r = fit(&cand)?;
            if r.loglik() > run.loglik() + 1e-9 * run.loglik().abs() {
                shapes = cand;
                run = r;
                improved = true;
                break;
            }
        }
        if !improved {
            return Ok((shapes, run));
        }
    }
}

pub(crate) fn branch_shapes(ph: &PhaseType) -> Vec<usize> {
    let m = ph.order();
    let t = ph.subgen();
    let mut shapes = Vec::new();
    let mut len = 0;
    for i in 0..m {
        len += 1;
        if i + 1 == m || t[(i, i + 1)] == 0.0 {
            shapes.push(len);
            len = 0;
        }
    }
    shapes
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Mixture EM with fixed integer shapes: `πₖ = Σwγₖ / Σw`, `λₖ = rₖ Σwγₖ / Σwγₖx`.
fn mixture_em(
    obs: &[(f64, f64)],
    shapes: &[usize],
    mut branches: Vec<(f64, f64)>,
    opts: &FitOptions,
    report: &dyn Fn(usize, f64),
) -> (Vec<(f64, f64)>, Vec<f64>, usize, bool) {
    let k = shapes.len();
    let lgam: Vec<f64> = shapes.iter().map(|&r| ln_factorial(r - 1)).collect();
    let total: f64 = obs.iter().map(|o| o.1).sum();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut terms = vec![0.0; k];
    loop {
        let mut ll = KahanSum::new();
        let mut s0 = vec![KahanSum::new(); k];
        let mut s1 = vec![KahanSum::new(); k];
        for &(x, w) in obs {
            let lx = x.ln();
            let mut top = f64::NEG_INFINITY;
            for b in 0..k {
                let (pi, rate) = branches[b];
                let r = shapes[b] as f64;
                terms[b] = if pi > 0.0 {
                    pi.ln() + r * rate.ln() + (r - 1.0) * lx - rate * x - lgam[b]
                } else {
                    f64::NEG_INFINITY
                };
                top = top.max(terms[b]);
            }
            let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
            ll.add(w * (top + sum.ln()));
            for b in 0..k {
                let g = w * (terms[b] - top).exp() / sum;
                s0[b].add(g);
                s1[b].add(g * x);
            }
        }
        let ll = ll.value();
        let prev = trace.last().copied();
        trace.push(ll);
        report(iterations, ll);
        if !ll.is_finite() {
            break;
        }
        if let Some(prev) = prev {
            if ll - prev <= opts.rel_tol * f64::abs(prev) {
                converged = true;
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        for b in 0..k {
            let (w0, w1) = (s0[b].value(), s1[b].value());
            let rate = if w0 > 0.0 && w1 > 0.0 { shapes[b] as f64 * w0 / w1 } else { branches[b].1 };
            branches[b] = ((w0 / total).max(0.0), rate);
        }
        iterations += 1;
    }
    (branches, trace, iterations, converged)
}

fn build(shapes: &[usize], branches: &[(f64, f64)]) -> Result<PhaseType> {
    let total: f64 = branches.iter().map(|b| b.0).sum();
    StructureSpec::HyperErlang {
        branches: shapes
            .iter()
            .zip(branches)
            .map(|(&shape, &(weight, rate))| ErlangBranch { weight: weight / total, shape, rate })
            .collect(),
    }
    .build()
}

/// Point-data fit with the shape search.
pub(crate) fn fit_point(
    obs: &[(f64, f64)],
    m: usize,
    mean: f64,
    opts: &FitOptions,
    progress: ProgressFn,
) -> Result<(Vec<usize>, Run)> {
    let fit = |shapes: &[usize]| -> Result<Run> {
        let shape = Shape::HyperErlang(shapes.to_vec());
        let mut best: Option<Run> = None;
        for restart in 0..opts.restarts {
            let mut rng = restart_rng(opts.seed, restart);
            let init = shape.initial(m, mean, restart, &mut rng)?;
            let start: Vec<(f64, f64)> = {
                let ph = &init;
                let mut idx = 0;
                shapes
                    .iter()
                    .map(|&r| {
                        let b = (ph.alpha()[idx], -ph.subgen()[(idx, idx)]);
                        idx += r;
                        b
                    })
                    .collect()
            };
            let report = |iteration, loglik| progress(Progress { restart, iteration, loglik });
            let (branches, trace, iterations, converged) = mixture_em(obs, shapes, start, opts, &report);
            let run = Run { model: build(shapes, &branches)?, trace, iterations, converged };
            if best.as_ref().is_none_or(|b| run.loglik() > b.loglik()) {
                best = Some(run);
            }
        }
        Ok(best.expect("restarts ≥ 1"))
    };
    search(m, &fit)
}
