//! Structure-specific starting points and parameter updates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::estep::Stats;
use crate::error::{Error, Result};
use crate::matfun::Matrix;
use crate::phd::{ErlangBranch, PhaseType, StructureSpec};

const TINY: f64 = 1e-300;

/// Free structure of a fitted representation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Shape {
    General,
    Cf1,
    Erlang,
    HyperErlang(Vec<usize>),
}

impl Shape {
    pub fn n_params(&self, m: usize) -> usize {
        match self {
            Shape::General => m * m + m - 1,
            Shape::Cf1 => 2 * m - 1,
            Shape::Erlang => 1,
            Shape::HyperErlang(shapes) => 2 * shapes.len() - 1,
        }
    }

    /// Seeded start with mean `mean`. Restart 0 of the chain families is deterministic.
    pub fn initial(&self, m: usize, mean: f64, restart: usize, rng: &mut ChaCha8Rng) -> Result<PhaseType> {
        let base = m as f64 / mean;
        match self {
            Shape::Erlang => StructureSpec::Erlang { states: m, rate: base }.build(),
            Shape::Cf1 => {
                let spread = if restart == 0 { 1.5f64 } else { rng.random_range(1.05..3.0) };
                let rates: Vec<f64> = (0..m).map(|i| spread.powf(i as f64 - (m as f64 - 1.0) / 2.0)).collect();
                let alpha = if restart == 0 {
                    vec![1.0 / m as f64; m]
                } else {
                    normalized((0..m).map(|_| rng.random_range(0.05..1.0)).collect())
                };
                let ph = StructureSpec::Cf1 { alpha, rates }.build()?;
                rescale(&ph, mean)
            }
            Shape::HyperErlang(shapes) => {
                let k = shapes.len();
                let branches = shapes
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| {
                        let factor: f64 = if restart == 0 {
                            2f64.powf(i as f64 - (k as f64 - 1.0) / 2.0)
                        } else {
                            rng.random_range(-1.0f64..1.0).exp()
                        };
                        ErlangBranch { weight: 1.0 / k as f64, shape: r, rate: r as f64 / mean * factor }
                    })
                    .collect();
                StructureSpec::HyperErlang { branches }.build()
            }
            Shape::General => {
                let alpha = normalized((0..m).map(|_| rng.random_range(0.0..1.0)).collect());
                let mut t = Matrix::zeros(m);
                for i in 0..m {
                    let mut out = 0.0;
                    for j in 0..m {
                        if i != j {
                            t[(i, j)] = rng.random_range(0.0..1.0);
                            out += t[(i, j)];
                        }
                    }
                    let exit = rng.random_range(0.01..1.0);
                    t[(i, i)] = -(out + exit);
                }
                rescale(&PhaseType::new(alpha, t)?, mean)
            }
        }
    }

    /// Maximizes the expected complete-data likelihood within the structure.
    pub fn update(&self, ph: &PhaseType, s: &Stats) -> Result<PhaseType> {
        let m = ph.order();
        let total_b: f64 = s.b.iter().sum();
        if !(total_b > 0.0) {
            return Err(Error::InvalidModel("expected initial counts vanish".into()));
        }
        let out = s.outflow();
        match self {
            Shape::General => {
                let alpha = normalized(s.b.clone());
                let mut t = ph.subgen().clone();
                for i in 0..m {
                    if s.z[i] <= TINY {
                        continue;
                    }
                    let mut row = s.exit[i] / s.z[i];
                    for j in 0..m {
                        if i != j {
                            t[(i, j)] = s.n[(i, j)] / s.z[i];
                            row += t[(i, j)];
                        }
                    }
                    t[(i, i)] = -row;
                }
                PhaseType::new(alpha, t)
            }
            Shape::Erlang => {
                let rate = out.iter().sum::<f64>() / s.z.iter().sum::<f64>();
                StructureSpec::Erlang { states: m, rate }.build()
            }
            Shape::Cf1 => {
                let alpha = normalized(s.b.clone());
                let rates: Vec<f64> = (0..m)
                    .map(|i| if s.z[i] > TINY && out[i] > 0.0 { out[i] / s.z[i] } else { -ph.subgen()[(i, i)] })
                    .collect();
                let (alpha, rates) = cf1_sort(alpha, rates);
                StructureSpec::Cf1 { alpha, rates }.build()
            }
            Shape::HyperErlang(shapes) => {
                let mut start = 0;
                let mut branches = Vec::with_capacity(shapes.len());
                for &r in shapes {
                    let z: f64 = s.z[start..start + r].iter().sum();
                    let o: f64 = out[start..start + r].iter().sum();
                    let rate = if z > TINY && o > 0.0 { o / z } else { -ph.subgen()[(start, start)] };
                    branches.push(ErlangBranch { weight: s.b[start] / total_b, shape: r, rate });
                    start += r;
                }
                StructureSpec::HyperErlang { branches }.build()
            }
        }
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Same distribution with `T` multiplied so the mean equals `mean`.
pub(crate) fn rescale(ph: &PhaseType, mean: f64) -> Result<PhaseType> {
    let c = ph.mean()? / mean;
    PhaseType::with_kind(ph.kind(), ph.alpha().to_vec(), ph.subgen().scaled(c))
}

/// Reorders a bidiagonal chain into nondecreasing rates by adjacent swaps,
/// each preserving the distribution.
pub(crate) fn cf1_sort(mut alpha: Vec<f64>, mut rates: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let m = rates.len();
    loop {
        let mut swapped = false;
        for i in 0..m.saturating_sub(1) {
            let (l, mu) = (rates[i], rates[i + 1]);
            if l > mu {
                let ratio = mu / l;
                alpha[i] += (1.0 - ratio) * alpha[i + 1];
                alpha[i + 1] *= ratio;
                rates.swap(i, i + 1);
                swapped = true;
            }
        }
        if !swapped {
            return (alpha, rates);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phd::StructureKind;
    use rand::SeedableRng;

    #[test]
    fn cf1_sort_preserves_distribution() {
        let alpha = vec![0.2, 0.5, 0.3];
        let rates = vec![4.0, 1.0, 2.5];
        let chain = |a: Vec<f64>, r: Vec<f64>| {
            let m = r.len();
            let mut t = Matrix::zeros(m);
            for i in 0..m {
                t[(i, i)] = -r[i];
                if i + 1 < m {
                    t[(i, i + 1)] = r[i];
                }
            }
            PhaseType::new(a, t).unwrap()
        };
        let before = chain(alpha.clone(), rates.clone());
        let (a2, r2) = cf1_sort(alpha, rates);
        assert!(r2.windows(2).all(|w| w[0] <= w[1]));
        let after = chain(a2, r2);
        for x in [0.1, 0.5, 1.0, 3.0] {
            assert!((before.pdf(x).unwrap() - after.pdf(x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn initial_means_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for shape in [Shape::General, Shape::Cf1, Shape::Erlang] {
            for restart in 0..3 {
                let ph = shape.initial(4, 2.5, restart, &mut rng).unwrap();
                assert!((ph.mean().unwrap() - 2.5).abs() < 1e-12, "{shape:?}");
            }
        }
        let he = Shape::HyperErlang(vec![2, 1]).initial(3, 2.0, 0, &mut rng).unwrap();
        assert_eq!(he.kind(), StructureKind::HyperErlang);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(Shape::General.n_params(3), 11);
        assert_eq!(Shape::Cf1.n_params(3), 5);
        assert_eq!(Shape::Erlang.n_params(7), 1);
        assert_eq!(Shape::HyperErlang(vec![2, 2, 1]).n_params(5), 5);
    }
}
