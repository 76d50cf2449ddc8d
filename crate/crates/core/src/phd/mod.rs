//! Continuous phase-type distributions `PH(α, T)`.
//!
//! `X` is the absorption time of a continuous-time Markov chain on `m`
//! transient states plus one absorbing state, started from `α`, with
//! transition intensities `T` among transient states and exit intensities
//! `T⁰ = −T·e`.

mod sample;
mod structure;

pub use structure::{ErlangBranch, StructureKind, StructureSpec};

use crate::error::{Error, Result};
use crate::matfun::{Matrix, Uniformized};
use crate::scalar::Real;

/// Largest number of transient states accepted anywhere in the crate.
pub const MAX_STATES: usize = 64;

/// A validated phase-type representation `(α, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseType<S: Real = f64> {
    kind: StructureKind,
    alpha: Vec<S>,
    subgen: Matrix<S>,
    exit: Vec<S>,
}

impl<S: Real> PhaseType<S> {
    /// Builds a general representation, validating `α` and `T`.
    pub fn new(alpha: Vec<S>, subgen: Matrix<S>) -> Result<Self> {
        Self::with_kind(StructureKind::General, alpha, subgen)
    }

    /// Like [`PhaseType::new`] but records the structure label carried into
    /// serialized documents.
    pub fn with_kind(kind: StructureKind, alpha: Vec<S>, subgen: Matrix<S>) -> Result<Self> {
        let alpha = validate_alpha(alpha, subgen.order())?;
        let (subgen, exit) = validate_subgenerator(subgen)?;
        Ok(Self { kind, alpha, subgen, exit })
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    /// Number of transient states `m`.
    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    pub fn subgen(&self) -> &Matrix<S> {
        &self.subgen
    }

    /// Exit vector `T⁰ = −T·e`.
    pub fn exit(&self) -> &[S] {
        &self.exit
    }

    /// Transient-state occupation `α e^{Tx}`.
    pub fn occupation(&self, x: S) -> Result<Vec<S>> {
        check_x(x)?;
        if x == S::zero() {
            return Ok(self.alpha.clone());
        }
        Ok(Uniformized::new(&self.subgen).apply_left(x, &self.alpha))
    }

    /// Density `f(x) = α e^{Tx} T⁰`.
    pub fn pdf(&self, x: S) -> Result<S> {
        Ok(dot(&self.occupation(x)?, &self.exit).max(S::zero()))
    }

    /// Reliability `R(x) = α e^{Tx} e`.
    pub fn survival(&self, x: S) -> Result<S> {
        Ok(self.occupation(x)?.into_iter().sum::<S>().max(S::zero()).min(S::one()))
    }

    /// `F(x) = 1 − R(x)`.
    pub fn cdf(&self, x: S) -> Result<S> {
        Ok(S::one() - self.survival(x)?)
    }

    /// `h(x) = f(x) / R(x)`.
    pub fn hazard(&self, x: S) -> Result<S> {
        let occ = self.occupation(x)?;
        let r: S = occ.iter().copied().sum();
        if r <= S::zero() {
            return Err(Error::TailUnderflow(x.as_f64()));
        }
        Ok(dot(&occ, &self.exit).max(S::zero()) / r)
    }

    /// `H(x) = −ln R(x)`.
    pub fn cum_hazard(&self, x: S) -> Result<S> {
        let r = self.survival(x)?;
        if r <= S::zero() {
            return Err(Error::TailUnderflow(x.as_f64()));
        }
        Ok(S::zero() - r.ln())
    }

    /// `(E[X], VAR[X])` with `E[X] = −αT⁻¹e` and `E[X²] = 2αT⁻²e`.
    pub fn moments(&self) -> Result<(S, S)> {
        let lu = self.subgen.lu()?;
        let first = lu.solve_left(&self.alpha);
        let second = lu.solve_left(&first);
        let mean = -first.iter().copied().sum::<S>();
        let raw2 = S::lit(2.0) * second.iter().copied().sum::<S>();
        Ok((mean, raw2 - mean * mean))
    }

    pub fn mean(&self) -> Result<S> {
        Ok(self.moments()?.0)
    }

    /// Default plotting horizon: five means.
    pub fn default_horizon(&self) -> Result<S> {
        Ok(S::lit(5.0) * self.mean()?)
    }
}

pub(crate) fn check_x<S: Real>(x: S) -> Result<()> {
    if !(x >= S::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite and non-negative, got {x}")));
    }
    Ok(())
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&u, &v)| u * v).sum()
}

pub(crate) fn validate_alpha<S: Real>(mut alpha: Vec<S>, order: usize) -> Result<Vec<S>> {
    if alpha.len() != order {
        return Err(Error::InvalidSpec(format!(
            "alpha has {} entries but T has order {order}",
            alpha.len()
        )));
    }
    let tol = S::tolerance();
    for a in &mut alpha {
        if !a.is_finite() || *a < -tol {
            return Err(Error::InvalidSpec("alpha entries must be non-negative".into()));
        }
        if *a < S::zero() {
            *a = S::zero();
        }
    }
    let total: S = alpha.iter().copied().sum();
    if (total - S::one()).abs() > tol {
        return Err(Error::InvalidSpec(format!("alpha must sum to 1 (sums to {total})")));
    }
    Ok(alpha)
}

/// Checks sub-generator invariants, clamps rounding noise and returns the exit vector.
pub(crate) fn validate_subgenerator<S: Real>(mut t: Matrix<S>) -> Result<(Matrix<S>, Vec<S>)> {
    let m = t.order();
    if m == 0 || m > MAX_STATES {
        return Err(Error::InvalidSpec(format!("order must be in 1..={MAX_STATES}, got {m}")));
    }
    t.check_finite().map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let scale = t.max_abs_diagonal().max(S::min_positive_value());
    let slack = S::tolerance() * scale;
    for i in 0..m {
        if t[(i, i)] >= S::zero() {
            return Err(Error::InvalidSpec(format!("diagonal entry T[{i}][{i}] must be negative")));
        }
        for j in 0..m {
            if i != j && t[(i, j)] < S::zero() {
                if t[(i, j)] < -slack {
                    return Err(Error::InvalidSpec(format!(
                        "off-diagonal entry T[{i}][{j}] must be non-negative"
                    )));
                }
                t[(i, j)] = S::zero();
            }
        }
    }
    let mut exit = Vec::with_capacity(m);
    for (i, r) in t.row_sums().into_iter().enumerate() {
        if r > slack {
            return Err(Error::InvalidSpec(format!("row {i} of T sums to {r} > 0")));
        }
        exit.push((-r).max(S::zero()));
    }
    // every state must be able to reach absorption
    let mut reaches: Vec<bool> = exit.iter().map(|&e| e > S::zero()).collect();
    if !reaches.iter().any(|&b| b) {
        return Err(Error::InvalidSpec("absorption is unreachable: every row of T sums to 0".into()));
    }
    loop {
        let mut changed = false;
        for i in 0..m {
            if !reaches[i] && (0..m).any(|j| j != i && reaches[j] && t[(i, j)] > S::zero()) {
                reaches[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if let Some(i) = reaches.iter().position(|&b| !b) {
        return Err(Error::InvalidSpec(format!(
            "absorption is unreachable from state {i} (T is singular)"
        )));
    }
    Ok((t, exit))
}
