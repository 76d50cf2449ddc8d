//! Common evaluator surface shared by classical and one cut-point models.

use crate::error::Result;
use crate::ocp::OneCutPointPhaseType;
use crate::phd::PhaseType;
use crate::scalar::Real;

pub trait Lifetime<S: Real = f64> {
    fn pdf(&self, x: S) -> Result<S>;
    fn survival(&self, x: S) -> Result<S>;
    fn hazard(&self, x: S) -> Result<S>;
    fn cum_hazard(&self, x: S) -> Result<S>;
    fn moments(&self) -> Result<(S, S)>;

    fn cdf(&self, x: S) -> Result<S> {
        Ok(S::one() - self.survival(x)?)
    }

    /// Point where the density and hazard may jump.
    fn discontinuity(&self) -> Option<S> {
        None
    }

    /// Right limits `(f(a⁺), h(a⁺))` at the discontinuity.
    fn right_limits(&self) -> Option<(S, Result<S>)> {
        None
    }

    fn sample(&self, n: usize, seed: u64) -> Result<Vec<S>>;
}

impl<S: Real> Lifetime<S> for PhaseType<S> {
    fn pdf(&self, x: S) -> Result<S> {
        PhaseType::pdf(self, x)
    }
    fn survival(&self, x: S) -> Result<S> {
        PhaseType::survival(self, x)
    }
    fn hazard(&self, x: S) -> Result<S> {
        PhaseType::hazard(self, x)
    }
    fn cum_hazard(&self, x: S) -> Result<S> {
        PhaseType::cum_hazard(self, x)
    }
    fn moments(&self) -> Result<(S, S)> {
        PhaseType::moments(self)
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<S>> {
        Ok(PhaseType::sample(self, n, seed))
    }
}

impl<S: Real> Lifetime<S> for OneCutPointPhaseType<S> {
    fn pdf(&self, x: S) -> Result<S> {
        OneCutPointPhaseType::pdf(self, x)
    }
    fn survival(&self, x: S) -> Result<S> {
        OneCutPointPhaseType::survival(self, x)
    }
    fn hazard(&self, x: S) -> Result<S> {
        OneCutPointPhaseType::hazard(self, x)
    }
    fn cum_hazard(&self, x: S) -> Result<S> {
        OneCutPointPhaseType::cum_hazard(self, x)
    }
    fn moments(&self) -> Result<(S, S)> {
        OneCutPointPhaseType::moments(self)
    }
    fn discontinuity(&self) -> Option<S> {
        Some(self.cut())
    }
    fn right_limits(&self) -> Option<(S, Result<S>)> {
        Some((self.pdf_right_of_cut(), self.hazard_right_of_cut()))
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<S>> {
        OneCutPointPhaseType::sample(self, n, seed)
    }
}
