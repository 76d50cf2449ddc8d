//! Truncated Poisson weights for uniformization.

/// Poisson probabilities `P[N = k]`, `k = 0..=K`, for `N ~ Poisson(lambda)`.
///
/// `K` is the smallest index past the mode whose right-tail bound drops below
/// `tail`. Weights are built outward from the mode and normalised, so large
/// rates do not underflow the way `exp(-lambda)` would; entries far left of
/// the mode are exactly zero.
pub fn poisson_weights(lambda: f64, tail: f64) -> Vec<f64> {
    assert!(lambda >= 0.0 && lambda.is_finite(), "poisson rate must be finite and >= 0");
    if lambda == 0.0 {
        return vec![1.0];
    }
    let mode = lambda.floor() as usize;
    let mut right = vec![1.0f64];
    let mut total = 1.0f64;

    // right of the mode
    let mut k = mode;
    loop {
        let next = right[right.len() - 1] * lambda / (k as f64 + 1.0);
        let ratio = lambda / (k as f64 + 2.0);
        if (k as f64 + 1.0) > lambda && ratio < 1.0 && next / (1.0 - ratio) < tail * total {
            break;
        }
        right.push(next);
        total += next;
        k += 1;
    }

    // left of the mode
    let mut left = Vec::new();
    let mut w = 1.0f64;
    let mut j = mode;
    while j > 0 {
        let prev = w * j as f64 / lambda;
        let ratio = (j as f64 - 1.0) / lambda;
        if prev < f64::MIN_POSITIVE || (ratio < 1.0 && prev / (1.0 - ratio) < tail * total) {
            break;
        }
        left.push(prev);
        total += prev;
        w = prev;
        j -= 1;
    }

    let first = mode - left.len();
    let mut out = vec![0.0; first];
    out.extend(left.iter().rev().map(|v| v / total));
    out.extend(right.iter().map(|v| v / total));
    out
}
