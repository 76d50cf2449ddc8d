#![allow(dead_code)]

use phasefit_core::dataio::Dataset;
use phasefit_core::Matrix64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain power series with scaling and squaring, `terms` terms per block.
pub fn taylor_expm(m: &Matrix64, terms: usize) -> Matrix64 {
    let n = m.order();
    let norm = m.norm_inf();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let a = m.scaled(1.0 / 2f64.powi(s));
    let mut sum = Matrix64::identity(n);
    let mut term = Matrix64::identity(n);
    for k in 1..=terms {
        term = term.matmul(&a).scaled(1.0 / k as f64);
        sum = sum.add(&term);
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Composite Simpson rule with `intervals` (even) panels.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Random sub-generator with every row leaking to absorption.
pub fn random_subgenerator(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Matrix64 {
    let mut t = Matrix64::zeros(m);
    for i in 0..m {
        let mut out = 0.0;
        for j in 0..m {
            if i != j && rng.random_bool(0.7) {
                t[(i, j)] = rng.random_range(0.0..scale);
                out += t[(i, j)];
            }
        }
        t[(i, i)] = -(out + rng.random_range(0.05 * scale..scale));
    }
    t
}

pub fn random_alpha(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn max_abs_diff(a: &Matrix64, b: &Matrix64) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Recurrence and death both recorded, time = days to death.
pub fn rotterdam() -> Dataset {
    let text = std::fs::read_to_string(data_path("rotterdam.csv")).unwrap();
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == "1" && f[2] == "1" {
            values.push(f[3].parse().unwrap());
        }
    }
    Dataset::new(values).unwrap()
}
