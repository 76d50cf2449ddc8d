//! One cut-point phase-type distributions `(α, T₁, T₂, a)`.
//!
//! The chain evolves under `T₁` up to the cut `a` and under `T₂` afterwards,
//! so for `y > a` the occupation is `α e^{T₁a} e^{T₂(y−a)}`. Density and
//! hazard may jump at `a`; survival and cumulative hazard are continuous.
//! The density value exactly at `a` belongs to the first zone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matfun::{Matrix, Uniformized};
use crate::phd::{check_x, dot, validate_alpha, validate_subgenerator, PhaseType, StructureKind, StructureSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OneCutPointPhaseType<S: Real = f64> {
    kind: StructureKind,
    alpha: Vec<S>,
    t1: Matrix<S>,
    t2: Matrix<S>,
    exit1: Vec<S>,
    exit2: Vec<S>,
    cut: S,
}

impl<S: Real> OneCutPointPhaseType<S> {
    /// Raw constructor: any pair of valid sub-generators of equal order.
    pub fn new(alpha: Vec<S>, t1: Matrix<S>, t2: Matrix<S>, cut: S) -> Result<Self> {
        Self::with_kind(StructureKind::General, alpha, t1, t2, cut)
    }

    pub fn with_kind(kind: StructureKind, alpha: Vec<S>, t1: Matrix<S>, t2: Matrix<S>, cut: S) -> Result<Self> {
        if !(cut > S::zero()) || !cut.is_finite() {
            return Err(Error::InvalidSpec(format!("cut must be positive, got {cut}")));
        }
        if t1.order() != t2.order() {
            return Err(Error::InvalidSpec(format!(
                "T1 and T2 must have the same order ({} vs {})",
                t1.order(),
                t2.order()
            )));
        }
        let alpha = validate_alpha(alpha, t1.order())?;
        let (t1, exit1) = validate_subgenerator(t1)?;
        let (t2, exit2) = validate_subgenerator(t2)?;
        Ok(Self { kind, alpha, t1, t2, exit1, exit2, cut })
    }

    /// Both zones built from structures of the same kind sharing one `α`.
    pub fn from_structures(zone1: &StructureSpec<S>, zone2: &StructureSpec<S>, cut: S) -> Result<Self> {
        if zone1.kind() != zone2.kind() {
            return Err(Error::InvalidSpec(format!(
                "zones must share one structure ({} vs {})",
                zone1.kind(),
                zone2.kind()
            )));
        }
        let p1 = zone1.build()?;
        let p2 = zone2.build()?;
        if p1.alpha() != p2.alpha() {
            return Err(Error::InvalidSpec("zones must share the initial vector alpha".into()));
        }
        Self::with_kind(p1.kind(), p1.alpha().to_vec(), p1.subgen().clone(), p2.subgen().clone(), cut)
    }

    /// Erlang zones with `α = (1, 0, …, 0)`.
    pub fn erlang(states: usize, rate1: S, rate2: S, cut: S) -> Result<Self> {
        Self::from_structures(
            &StructureSpec::Erlang { states, rate: rate1 },
            &StructureSpec::Erlang { states, rate: rate2 },
            cut,
        )
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    pub fn t1(&self) -> &Matrix<S> {
        &self.t1
    }

    pub fn t2(&self) -> &Matrix<S> {
        &self.t2
    }

    pub fn exit1(&self) -> &[S] {
        &self.exit1
    }

    pub fn exit2(&self) -> &[S] {
        &self.exit2
    }

    pub fn cut(&self) -> S {
        self.cut
    }

    /// The classical distribution `(α, T₁)` governing the first zone.
    pub fn first_zone(&self) -> PhaseType<S> {
        PhaseType::with_kind(self.kind, self.alpha.clone(), self.t1.clone()).expect("validated zone")
    }

    /// Occupation at `y` and whether `y` lies in the second zone.
    fn occupation(&self, y: S) -> Result<(Vec<S>, bool)> {
        check_x(y)?;
        if y <= self.cut {
            if y == S::zero() {
                return Ok((self.alpha.clone(), false));
            }
            return Ok((Uniformized::new(&self.t1).apply_left(y, &self.alpha), false));
        }
        let at_cut = self.occupation_at_cut();
        Ok((Uniformized::new(&self.t2).apply_left(y - self.cut, &at_cut), true))
    }

    fn occupation_at_cut(&self) -> Vec<S> {
        Uniformized::new(&self.t1).apply_left(self.cut, &self.alpha)
    }

    pub fn pdf(&self, y: S) -> Result<S> {
        let (occ, second) = self.occupation(y)?;
        let exit = if second { &self.exit2 } else { &self.exit1 };
        Ok(dot(&occ, exit).max(S::zero()))
    }

    /// Limit of the density as `y → a⁺`, `α e^{T₁a} T₂⁰`.
    pub fn pdf_right_of_cut(&self) -> S {
        dot(&self.occupation_at_cut(), &self.exit2).max(S::zero())
    }

    pub fn survival(&self, y: S) -> Result<S> {
        let (occ, _) = self.occupation(y)?;
        Ok(occ.into_iter().sum::<S>().max(S::zero()).min(S::one()))
    }

    pub fn cdf(&self, y: S) -> Result<S> {
        Ok(S::one() - self.survival(y)?)
    }

    pub fn hazard(&self, y: S) -> Result<S> {
        let (occ, second) = self.occupation(y)?;
        let r: S = occ.iter().copied().sum();
        if r <= S::zero() {
            return Err(Error::TailUnderflow(y.as_f64()));
        }
        let exit = if second { &self.exit2 } else { &self.exit1 };
        Ok(dot(&occ, exit).max(S::zero()) / r)
    }

    /// Limit of the hazard as `y → a⁺`.
    pub fn hazard_right_of_cut(&self) -> Result<S> {
        let occ = self.occupation_at_cut();
        let r: S = occ.iter().copied().sum();
        if r <= S::zero() {
            return Err(Error::TailUnderflow(self.cut.as_f64()));
        }
        Ok(dot(&occ, &self.exit2).max(S::zero()) / r)
    }

    pub fn cum_hazard(&self, y: S) -> Result<S> {
        let r = self.survival(y)?;
        if r <= S::zero() {
            return Err(Error::TailUnderflow(y.as_f64()));
        }
        Ok(S::zero() - r.ln())
    }

    /// `(E[Y], VAR[Y])`:
    ///
    /// `E[Y] = −αT₁⁻¹e + α e^{T₁a}(T₁⁻¹ − T₂⁻¹)e`,
    /// `E[Y²] = 2αT₁⁻²e − 2α e^{T₁a}[T₂⁻¹(aI − T₂⁻¹) − T₁⁻¹(aI − T₁⁻¹)]e`.
    pub fn moments(&self) -> Result<(S, S)> {
        let lu1 = self.t1.lu()?;
        let lu2 = self.t2.lu()?;
        let ones = vec![S::one(); self.order()];
        let a = self.cut;
        let at_cut = self.occupation_at_cut();

        let inv1_e = lu1.solve(&ones);
        let inv2_e = lu2.solve(&ones);
        let inv1sq_e = lu1.solve(&inv1_e);
        let inv2sq_e = lu2.solve(&inv2_e);

        let diff: Vec<S> = inv1_e.iter().zip(&inv2_e).map(|(&u, &v)| u - v).collect();
        let mean = -dot(&self.alpha, &inv1_e) + dot(&at_cut, &diff);

        // T⁻¹(aI − T⁻¹)e = a·T⁻¹e − T⁻²e
        let bracket: Vec<S> = (0..self.order())
            .map(|i| (a * inv2_e[i] - inv2sq_e[i]) - (a * inv1_e[i] - inv1sq_e[i]))
            .collect();
        let raw2 = S::lit(2.0) * dot(&self.alpha, &inv1sq_e) - S::lit(2.0) * dot(&at_cut, &bracket);
        Ok((mean, raw2 - mean * mean))
    }

    pub fn mean(&self) -> Result<S> {
        Ok(self.moments()?.0)
    }

    pub fn default_horizon(&self) -> Result<S> {
        Ok(S::lit(5.0) * self.mean()?)
    }

    /// Inverse-CDF sampling: bisection on the survival function until it is
    /// within `1e-12` of the uniform target.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<S>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.mean()?.as_f64().max(self.cut.as_f64());
        let surv = |y: f64| self.survival(S::lit(y)).map(|r| r.as_f64());
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = 1.0 - rng.random::<f64>();
            let (mut lo, mut hi) = (0.0f64, scale);
            while surv(hi)? > u {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let r = surv(mid)?;
                if (r - u).abs() < 1e-12 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if r > u {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            out.push(S::lit(0.5 * (lo + hi)));
        }
        Ok(out)
    }
}
