use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PhaseType;
use crate::scalar::Real;

/// Index of the first cumulative bucket exceeding `u`; ties go to the lower index.
pub(crate) fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Exponential draw by inversion.
pub(crate) fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

impl<S: Real> PhaseType<S> {
    /// Simulates `n` absorption times of the underlying chain.
    ///
    /// Each draw picks a start state from `α`, then alternates exponential
    /// sojourns (rate `−Tᵢᵢ`) and jumps chosen in proportion to row `i` of
    /// `[T | T⁰]` until the absorbing state is hit. Deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<S> {
        let m = self.order();
        let alpha: Vec<f64> = self.alpha.iter().map(|a| a.as_f64()).collect();
        // jump weights per state: m transient targets followed by absorption
        let jumps: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut w: Vec<f64> = (0..m)
                    .map(|j| if i == j { 0.0 } else { self.subgen[(i, j)].as_f64() })
                    .collect();
                w.push(self.exit[i].as_f64());
                w
            })
            .collect();
        let rates: Vec<f64> = (0..m).map(|i| -self.subgen[(i, i)].as_f64()).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut state = pick(&alpha, rng.random());
                let mut time = 0.0;
                loop {
                    time += exponential(&mut rng, rates[state]);
                    let next = pick(&jumps[state], rng.random());
                    if next == m {
                        break;
                    }
                    state = next;
                }
                S::lit(time)
            })
            .collect()
    }
}
