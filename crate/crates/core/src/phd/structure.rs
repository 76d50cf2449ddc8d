use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PhaseType, MAX_STATES};
use crate::error::{Error, Result};
use crate::matfun::Matrix;
use crate::scalar::Real;

/// Named layouts of `(α, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Exponential,
    Erlang,
    Hypoexponential,
    Hyperexponential,
    Coxian,
    GeneralizedCoxian,
    Cf1,
    HyperErlang,
    General,
}

impl StructureKind {
    pub const ALL: [StructureKind; 9] = [
        StructureKind::Exponential,
        StructureKind::Erlang,
        StructureKind::Hypoexponential,
        StructureKind::Hyperexponential,
        StructureKind::Coxian,
        StructureKind::GeneralizedCoxian,
        StructureKind::Cf1,
        StructureKind::HyperErlang,
        StructureKind::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Exponential => "exponential",
            StructureKind::Erlang => "erlang",
            StructureKind::Hypoexponential => "hypoexponential",
            StructureKind::Hyperexponential => "hyperexponential",
            StructureKind::Coxian => "coxian",
            StructureKind::GeneralizedCoxian => "generalized_coxian",
            StructureKind::Cf1 => "cf1",
            StructureKind::HyperErlang => "hyper_erlang",
            StructureKind::General => "general",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        StructureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown structure '{s}'")))
    }
}

/// One Erlang branch of a hyper-Erlang mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangBranch<S> {
    pub weight: S,
    pub shape: usize,
    pub rate: S,
}

/// Parameters for each named structure. `build` lays `(α, T)` out as the
/// usual textbook displays: chains run along the superdiagonal, state 0 first.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureSpec<S> {
    Exponential { rate: S },
    Erlang { states: usize, rate: S },
    /// Distinct rates in series.
    Hypoexponential { rates: Vec<S> },
    /// Mixture of exponentials: diagonal `T`.
    Hyperexponential { alpha: Vec<S>, rates: Vec<S> },
    /// Series with early exit: from state `j` continue with probability `branch[j]`.
    Coxian { rates: Vec<S>, branch: Vec<S> },
    GeneralizedCoxian { alpha: Vec<S>, rates: Vec<S>, branch: Vec<S> },
    /// Canonical form 1: bidiagonal with nondecreasing rates, general `α`.
    Cf1 { alpha: Vec<S>, rates: Vec<S> },
    HyperErlang { branches: Vec<ErlangBranch<S>> },
    General { alpha: Vec<S>, subgen: Vec<Vec<S>> },
}

impl<S: Real> StructureSpec<S> {
    pub fn kind(&self) -> StructureKind {
        match self {
            StructureSpec::Exponential { .. } => StructureKind::Exponential,
            StructureSpec::Erlang { .. } => StructureKind::Erlang,
            StructureSpec::Hypoexponential { .. } => StructureKind::Hypoexponential,
            StructureSpec::Hyperexponential { .. } => StructureKind::Hyperexponential,
            StructureSpec::Coxian { .. } => StructureKind::Coxian,
            StructureSpec::GeneralizedCoxian { .. } => StructureKind::GeneralizedCoxian,
            StructureSpec::Cf1 { .. } => StructureKind::Cf1,
            StructureSpec::HyperErlang { .. } => StructureKind::HyperErlang,
            StructureSpec::General { .. } => StructureKind::General,
        }
    }

    /// Lays out `(α, T)` for this structure.
    pub fn build(&self) -> Result<PhaseType<S>> {
        let kind = self.kind();
        let (alpha, t) = match self {
            StructureSpec::Exponential { rate } => {
                check_rates(&[*rate])?;
                (vec![S::one()], Matrix::diagonal(&[-*rate]))
            }
            StructureSpec::Erlang { states, rate } => {
                check_order(*states)?;
                check_rates(&[*rate])?;
                let rates = vec![*rate; *states];
                (first_state(*states), chain(&rates, &vec![S::one(); states - 1]))
            }
            StructureSpec::Hypoexponential { rates } => {
                check_order(rates.len())?;
                check_rates(rates)?;
                for i in 0..rates.len() {
                    for j in i + 1..rates.len() {
                        if rates[i] == rates[j] {
                            return Err(Error::InvalidSpec(format!(
                                "hypoexponential rates must be pairwise distinct (rate {i} equals rate {j}); use erlang for equal rates"
                            )));
                        }
                    }
                }
                let m = rates.len();
                (first_state(m), chain(rates, &vec![S::one(); m - 1]))
            }
            StructureSpec::Hyperexponential { alpha, rates } => {
                check_order(rates.len())?;
                check_rates(rates)?;
                let neg: Vec<S> = rates.iter().map(|&r| -r).collect();
                (alpha.clone(), Matrix::diagonal(&neg))
            }
            StructureSpec::Coxian { rates, branch } => {
                check_order(rates.len())?;
                check_rates(rates)?;
                check_branch(branch, rates.len())?;
                (first_state(rates.len()), chain(rates, branch))
            }
            StructureSpec::GeneralizedCoxian { alpha, rates, branch } => {
                check_order(rates.len())?;
                check_rates(rates)?;
                check_branch(branch, rates.len())?;
                (alpha.clone(), chain(rates, branch))
            }
            StructureSpec::Cf1 { alpha, rates } => {
                check_order(rates.len())?;
                check_rates(rates)?;
                if rates.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidSpec("cf1 rates must be nondecreasing".into()));
                }
                (alpha.clone(), chain(rates, &vec![S::one(); rates.len() - 1]))
            }
            StructureSpec::HyperErlang { branches } => hyper_erlang(branches)?,
            StructureSpec::General { alpha, subgen } => {
                (alpha.clone(), Matrix::from_rows(subgen).map_err(|e| Error::InvalidSpec(e.to_string()))?)
            }
        };
        PhaseType::with_kind(kind, alpha, t)
    }
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > MAX_STATES {
        return Err(Error::InvalidSpec(format!("number of states must be in 1..={MAX_STATES}, got {m}")));
    }
    Ok(())
}

fn check_rates<S: Real>(rates: &[S]) -> Result<()> {
    if let Some(i) = rates.iter().position(|r| !(*r > S::zero()) || !r.is_finite()) {
        return Err(Error::InvalidSpec(format!("rate {i} must be positive and finite")));
    }
    Ok(())
}

fn check_branch<S: Real>(branch: &[S], m: usize) -> Result<()> {
    if branch.len() + 1 != m {
        return Err(Error::InvalidSpec(format!(
            "coxian needs {} branching probabilities, got {}",
            m - 1,
            branch.len()
        )));
    }
    if let Some(j) = branch.iter().position(|g| !(*g > S::zero() && *g <= S::one())) {
        return Err(Error::InvalidSpec(format!("branching probability {j} must lie in (0, 1]")));
    }
    Ok(())
}

fn first_state<S: Real>(m: usize) -> Vec<S> {
    let mut a = vec![S::zero(); m];
    a[0] = S::one();
    a
}

/// Bidiagonal chain: `T[i][i] = −λᵢ`, `T[i][i+1] = gᵢ λᵢ`.
fn chain<S: Real>(rates: &[S], branch: &[S]) -> Matrix<S> {
    let m = rates.len();
    let mut t = Matrix::zeros(m);
    for i in 0..m {
        t[(i, i)] = -rates[i];
        if i + 1 < m {
            t[(i, i + 1)] = branch[i] * rates[i];
        }
    }
    t
}

fn hyper_erlang<S: Real>(branches: &[ErlangBranch<S>]) -> Result<(Vec<S>, Matrix<S>)> {
    if branches.is_empty() {
        return Err(Error::InvalidSpec("hyper-erlang needs at least one branch".into()));
    }
    let m: usize = branches.iter().map(|b| b.shape).sum();
    check_order(m)?;
    let mut alpha = vec![S::zero(); m];
    let mut t = Matrix::zeros(m);
    let mut start = 0;
    for (k, b) in branches.iter().enumerate() {
        if b.shape == 0 {
            return Err(Error::InvalidSpec(format!("branch {k} has zero shape")));
        }
        check_rates(&[b.rate])?;
        if !(b.weight >= S::zero()) {
            return Err(Error::InvalidSpec(format!("branch {k} weight must be non-negative")));
        }
        alpha[start] = b.weight;
        for i in start..start + b.shape {
            t[(i, i)] = -b.rate;
            if i + 1 < start + b.shape {
                t[(i, i + 1)] = b.rate;
            }
        }
        start += b.shape;
    }
    Ok((alpha, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_layout() {
        let d = StructureSpec::Erlang { states: 2, rate: 1.0 }.build().unwrap();
        assert_eq!(d.alpha(), &[1.0, 0.0]);
        assert_eq!(d.subgen().to_rows(), vec![vec![-1.0, 1.0], vec![0.0, -1.0]]);
        assert_eq!(d.kind(), StructureKind::Erlang);
    }

    #[test]
    fn exponential_layout() {
        let d = StructureSpec::Exponential { rate: 2.0 }.build().unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.alpha(), &[1.0]);
        assert_eq!(d.subgen().to_rows(), vec![vec![-2.0]]);
    }

    #[test]
    fn coxian_layout() {
        let d = StructureSpec::Coxian { rates: vec![1.0, 2.0], branch: vec![0.5] }.build().unwrap();
        assert_eq!(d.alpha(), &[1.0, 0.0]);
        assert_eq!(d.subgen().to_rows(), vec![vec![-1.0, 0.5], vec![0.0, -2.0]]);
        assert_eq!(d.exit(), &[0.5, 2.0]);
    }

    #[test]
    fn hyper_erlang_layout() {
        let d = StructureSpec::HyperErlang {
            branches: vec![
                ErlangBranch { weight: 0.3, shape: 1, rate: 2.0 },
                ErlangBranch { weight: 0.7, shape: 2, rate: 5.0 },
            ],
        }
        .build()
        .unwrap();
        assert_eq!(d.alpha(), &[0.3, 0.7, 0.0]);
        assert_eq!(d.exit(), &[2.0, 0.0, 5.0]);
        assert_eq!(d.subgen()[(1, 2)], 5.0);
    }

    #[test]
    fn invalid_specs_name_the_constraint() {
        let e = StructureSpec::Hypoexponential { rates: vec![1.0, 1.0] }.build().unwrap_err();
        assert!(e.to_string().contains("pairwise distinct"));
        let e = StructureSpec::Cf1 { alpha: vec![0.5, 0.5], rates: vec![2.0, 1.0] }.build().unwrap_err();
        assert!(e.to_string().contains("nondecreasing"));
        let e = StructureSpec::Coxian { rates: vec![1.0, 2.0], branch: vec![1.5] }.build().unwrap_err();
        assert!(e.to_string().contains("(0, 1]"));
        let e = StructureSpec::Exponential { rate: -1.0 }.build().unwrap_err();
        assert!(e.to_string().contains("positive"));
        let e = StructureSpec::Erlang { states: 0, rate: 1.0 }.build().unwrap_err();
        assert!(e.to_string().contains("number of states"));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in StructureKind::ALL {
            assert_eq!(k.as_str().parse::<StructureKind>().unwrap(), k);
        }
        assert_eq!("hyper-erlang".parse::<StructureKind>().unwrap(), StructureKind::HyperErlang);
    }
}
