//! Dense kernels for sub-generator matrices.
//!
//! Matrix exponentials of Metzler matrices (non-negative off-diagonal, which
//! covers every sub-generator) are computed by uniformization: with
//! `θ = 1.01·max|Mᵢᵢ|` and `P = I + M/θ ≥ 0`,
//! `e^{M} = Σₖ Pois(k; θ)·Pᵏ`, truncated once the Poisson tail is below
//! `1e-15`. Every term is non-negative, so the result of a sub-generator is
//! sub-stochastic with no cancellation. Large rates are scaled down first and
//! squared back up. Matrices with negative off-diagonal entries fall back to
//! a scaled Taylor series.

mod matrix;
mod poisson;

pub use matrix::{Lu, Matrix};
pub use poisson::poisson_weights;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Poisson tail mass dropped by every uniformization sum.
pub const POISSON_TAIL: f64 = 1e-15;

/// Largest uniformization rate handled without scaling and squaring.
const MAX_SCALED_RATE: f64 = 2.0;

/// Above this `θx`, vector actions switch to the squared matrix route.
const MAX_VECTOR_RATE: f64 = 4096.0;

/// `e^{M}`.
pub fn expm<S: Real>(m: &Matrix<S>) -> Result<Matrix<S>> {
    m.check_finite()?;
    let n = m.order();
    if m.max_abs() == S::zero() {
        return Ok(Matrix::identity(n));
    }
    let mut out = if m.is_metzler() { expm_uniformized(m) } else { expm_taylor(m) };
    out.flush_subnormals();
    Ok(out)
}

fn squarings_for(rate: f64) -> i32 {
    if rate > MAX_SCALED_RATE {
        (rate / MAX_SCALED_RATE).log2().ceil() as i32
    } else {
        0
    }
}

fn expm_uniformized<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    let n = m.order();
    let base = (S::lit(1.01) * m.max_abs_diagonal()).max(S::min_positive_value());
    let squarings = squarings_for(base.as_f64());
    let scale = S::lit(2f64.powi(squarings));
    let theta = base / scale;
    let mut p = Matrix::identity(n);
    p.add_scaled(S::one() / (theta * scale), m);
    // ‖P‖ exceeds one for Metzler matrices that are not sub-generators
    // (block matrices); terms are then bounded by Pois(k; θ)·ρᵏ.
    let rho = p.norm_inf().as_f64().max(1.0);
    let theta_f = theta.as_f64();
    // θ ≤ MAX_SCALED_RATE here, so e^{-θ} cannot underflow.
    let mut w = (-theta_f).exp();
    let mut acc = Matrix::identity(n).scaled(S::lit(w));
    let mut term = Matrix::identity(n);
    let mut bound = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        w *= theta_f / k as f64;
        bound *= rho;
        let ratio = theta_f * rho / (k as f64 + 1.0);
        if k as f64 > theta_f * rho && ratio < 1.0 && w * bound / (1.0 - ratio) < POISSON_TAIL {
            break;
        }
        term = term.matmul(&p);
        acc.add_scaled(S::lit(w), &term);
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    acc
}

fn expm_taylor<S: Real>(m: &Matrix<S>) -> Matrix<S> {
    let n = m.order();
    let norm = m.norm_inf().as_f64();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m.scaled(S::lit(2f64.powi(-squarings)));
    let mut acc = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..40 {
        term = term.matmul(&a).scaled(S::lit(1.0 / k as f64));
        acc = acc.add(&term);
        if term.max_abs() <= S::epsilon() * S::lit(1e-2) * acc.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    acc
}

fn check_time<S: Real>(x: S) -> Result<()> {
    if !(x >= S::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("time must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// `e^{T x} v` without forming the matrix exponential.
pub fn expm_action<S: Real>(t: &Matrix<S>, x: S, v: &[S]) -> Result<Vec<S>> {
    check_time(x)?;
    if v.len() != t.order() {
        return Err(Error::Dimension { expected: t.order(), got: v.len() });
    }
    t.check_finite()?;
    if x == S::zero() {
        return Ok(v.to_vec());
    }
    if !is_substochastic_generator(t) {
        return Ok(expm(&t.scaled(x))?.mul_vec(v));
    }
    Ok(Uniformized::new(t).apply(x, v))
}

/// `v e^{T x}` for a row vector `v`.
pub fn expm_action_left<S: Real>(t: &Matrix<S>, x: S, v: &[S]) -> Result<Vec<S>> {
    check_time(x)?;
    if v.len() != t.order() {
        return Err(Error::Dimension { expected: t.order(), got: v.len() });
    }
    t.check_finite()?;
    if x == S::zero() {
        return Ok(v.to_vec());
    }
    if !is_substochastic_generator(t) {
        return Ok(expm(&t.scaled(x))?.vec_mul(v));
    }
    Ok(Uniformized::new(t).apply_left(x, v))
}

/// `∫₀ˣ e^{T u} A e^{T(x−u)} du`, read off the upper-right block of
/// `exp([[T, A], [0, T]]·x)`.
pub fn conv_integral<S: Real>(t: &Matrix<S>, x: S, a: &Matrix<S>) -> Result<Matrix<S>> {
    check_time(x)?;
    if a.order() != t.order() {
        return Err(Error::Dimension { expected: t.order(), got: a.order() });
    }
    let n = t.order();
    if x == S::zero() {
        return Ok(Matrix::zeros(n));
    }
    let block = Matrix::from_blocks(t, a, &Matrix::zeros(n), t).scaled(x);
    let [_, upper_right, _, _] = expm(&block)?.split_blocks();
    Ok(upper_right)
}

/// A Metzler matrix prepared for repeated uniformization: `P = I + T/θ`.
#[derive(Debug, Clone)]
pub struct Uniformized<S> {
    t: Matrix<S>,
    p: Matrix<S>,
    theta: S,
}

impl<S: Real> Uniformized<S> {
    pub fn new(t: &Matrix<S>) -> Self {
        debug_assert!(t.is_metzler());
        let n = t.order();
        let theta = (S::lit(1.01) * t.max_abs_diagonal()).max(S::min_positive_value());
        let mut p = Matrix::identity(n);
        p.add_scaled(S::one() / theta, t);
        Self { t: t.clone(), p, theta }
    }

    pub fn theta(&self) -> S {
        self.theta
    }

    fn weights(&self, x: S, tail: f64) -> Option<Vec<f64>> {
        let rate = (self.theta * x).as_f64();
        (rate <= MAX_VECTOR_RATE).then(|| poisson_weights(rate, tail))
    }

    /// `e^{T x} v`.
    pub fn apply(&self, x: S, v: &[S]) -> Vec<S> {
        let Some(weights) = self.weights(x, POISSON_TAIL) else {
            return expm(&self.t.scaled(x)).expect("finite generator").mul_vec(v);
        };
        let mut term = v.to_vec();
        let mut acc: Vec<S> = term.iter().map(|&u| u * S::lit(weights[0])).collect();
        for &w in &weights[1..] {
            term = self.p.mul_vec(&term);
            let w = S::lit(w);
            acc.iter_mut().zip(&term).for_each(|(a, &u)| *a += w * u);
        }
        flush(&mut acc);
        acc
    }

    /// `v e^{T x}` for a row vector.
    pub fn apply_left(&self, x: S, v: &[S]) -> Vec<S> {
        let Some(weights) = self.weights(x, POISSON_TAIL) else {
            return expm(&self.t.scaled(x)).expect("finite generator").vec_mul(v);
        };
        let mut term = v.to_vec();
        let mut acc: Vec<S> = term.iter().map(|&u| u * S::lit(weights[0])).collect();
        for &w in &weights[1..] {
            term = self.p.vec_mul(&term);
            let w = S::lit(w);
            acc.iter_mut().zip(&term).for_each(|(a, &u)| *a += w * u);
        }
        flush(&mut acc);
        acc
    }

    /// Adds `scale · ∫₀ˣ e^{T(x−u)} g f e^{T u} du` to `out`, where `g` is a
    /// column and `f` a row vector.
    ///
    /// Uses `∫₀ˣ Pois(a; θ(x−u)) Pois(b; θu) du = Pois(a+b+1; θx)/θ`, giving
    /// `(1/θ) Σₐ (Pᵃ g)(uₐ)` with `uₐ = Pois(a+1)·f + uₐ₊₁ P`.
    pub fn accumulate_convolution(&self, x: S, g: &[S], f: &[S], scale: S, out: &mut Matrix<S>) {
        let n = self.t.order();
        if x == S::zero() {
            return;
        }
        let rate = (self.theta * x).as_f64();
        let Some(weights) = self.weights(x, POISSON_TAIL / rate.max(1.0)) else {
            let mut a = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = g[i] * f[j];
                }
            }
            // ∫ e^{T(x-u)} A e^{Tu} du equals conv_integral with u -> x-u
            let c = conv_integral(&self.t, x, &a).expect("finite generator");
            out.add_scaled(scale, &c);
            return;
        };
        // shifted weights Pois(l+1), l = 0..L
        let shifted = &weights[1..];
        if shifted.is_empty() {
            return;
        }
        let depth = shifted.len();
        let mut cols: Vec<Vec<S>> = Vec::with_capacity(depth);
        cols.push(g.to_vec());
        for a in 1..depth {
            let next = self.p.mul_vec(&cols[a - 1]);
            cols.push(next);
        }
        let mut u: Vec<S> = f.iter().map(|&v| v * S::lit(shifted[depth - 1])).collect();
        let factor = scale / self.theta;
        for a in (0..depth).rev() {
            if a + 1 < depth {
                let mut next = self.p.vec_mul(&u);
                let w = S::lit(shifted[a]);
                next.iter_mut().zip(f).for_each(|(x, &fv)| *x += w * fv);
                u = next;
            }
            let col = &cols[a];
            for i in 0..n {
                let ci = col[i] * factor;
                if ci == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += ci * u[j];
                }
            }
        }
    }
}

/// Metzler with non-positive row sums (up to rounding): `‖I + T/θ‖∞ ≤ 1`.
fn is_substochastic_generator<S: Real>(t: &Matrix<S>) -> bool {
    let slack = S::tolerance() * t.max_abs_diagonal().max(S::one());
    t.is_metzler() && t.row_sums().iter().all(|&r| r <= slack)
}

fn flush<S: Real>(v: &mut [S]) {
    for x in v {
        if x.abs() < S::min_positive_value() {
            *x = S::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn scalar_exponential() {
        let m = Matrix::from_rows(&[vec![-2.0]]).unwrap();
        let e = expm(&m).unwrap();
        assert!(close(e[(0, 0)], (-2.0f64).exp(), 1e-15));
    }

    #[test]
    fn diagonal_exponential() {
        let m = Matrix::diagonal(&[-1.0, -3.0]);
        let e = expm(&m).unwrap();
        assert!(close(e[(0, 0)], (-1.0f64).exp(), 1e-15));
        assert!(close(e[(1, 1)], (-3.0f64).exp(), 1e-15));
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(1, 0)], 0.0);
    }

    #[test]
    fn zero_matrix_gives_identity_exactly() {
        let m = Matrix::from_rows(&[vec![-1.0, 1.0], vec![0.5, -2.0]]).unwrap().scaled(0.0);
        assert_eq!(expm(&m).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn action_examples() {
        let t = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        assert_eq!(expm_action(&t, 0.0, &[3.0]).unwrap(), vec![3.0]);
        let r = expm_action(&t, 1.0, &[1.0]).unwrap();
        assert!(close(r[0], (-1.0f64).exp(), 1e-15));

        // e^{-λx}[[1, λx], [0, 1]] with λ = 1, x = 2
        let t = Matrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let r = expm_action(&t, 2.0, &[1.0, 1.0]).unwrap();
        let e2 = (-2.0f64).exp();
        assert!(close(r[0], 3.0 * e2, 1e-15));
        assert!(close(r[1], e2, 1e-15));
        let full = expm(&t.scaled(2.0)).unwrap().mul_vec(&[1.0, 1.0]);
        assert!(close(r[0], full[0], 1e-14));
    }

    #[test]
    fn action_errors() {
        let t = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(expm_action(&t, -1.0, &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(expm_action(&t, 1.0, &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn conv_scalar_closed_form() {
        let t = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let a = Matrix::identity(1);
        let c = conv_integral(&t, 1.0, &a).unwrap();
        assert!(close(c[(0, 0)], (-1.0f64).exp(), 1e-14));
        assert_eq!(conv_integral(&t, 0.0, &a).unwrap(), Matrix::zeros(1));
    }

    #[test]
    fn huge_time_underflows_to_exact_zero() {
        let t = Matrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let e = expm(&t.scaled(1e5)).unwrap();
        assert!(e.as_slice().iter().all(|&v| v == 0.0));
        let u = Uniformized::new(&t);
        assert!(u.apply(1e5, &[1.0, 1.0]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vector_convolution_matches_block_route() {
        let t = Matrix::from_rows(&[
            vec![-3.0, 1.0, 0.5],
            vec![0.2, -1.0, 0.3],
            vec![0.0, 2.0, -2.5],
        ])
        .unwrap();
        let g = [0.3, 1.2, 0.7];
        let f = [0.5, 0.25, 0.25];
        for &x in &[0.01, 0.7, 3.0] {
            let mut acc = Matrix::zeros(3);
            Uniformized::new(&t).accumulate_convolution(x, &g, &f, 1.0, &mut acc);
            let mut a = Matrix::zeros(3);
            for i in 0..3 {
                for j in 0..3 {
                    a[(i, j)] = g[i] * f[j];
                }
            }
            let reference = conv_integral(&t, x, &a).unwrap();
            for (u, v) in acc.as_slice().iter().zip(reference.as_slice()) {
                assert!(close(*u, *v, 1e-13), "x={x}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn f32_kernels() {
        let t = Matrix::<f32>::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let e = expm(&t).unwrap();
        let e1 = (-1.0f32).exp();
        assert!((e[(0, 1)] - e1).abs() < 1e-6);
        assert!((e[(1, 1)] - e1).abs() < 1e-6);
    }
}
