//! Parameter-level model descriptions, as typed by a user.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::ocp::OneCutPointPhaseType;
use crate::phd::{ErlangBranch, StructureKind, StructureSpec};

/// Second-zone parameters of a cut-point model; `α` and the layout are shared.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgen: Option<Vec<Vec<f64>>>,
}

/// A named structure with the parameters it needs. Giving `cut` and `zone2`
/// makes it a cut-point model.
///
/// | structure | fields |
/// |---|---|
/// | exponential | `rate` |
/// | erlang | `states`, `rate` |
/// | hypoexponential | `rates` |
/// | hyperexponential, cf1 | `alpha`, `rates` |
/// | coxian | `rates`, `branch` |
/// | generalized_coxian | `alpha`, `rates`, `branch` |
/// | hyper_erlang | `shapes`, `alpha` (branch weights), `rates` (branch rates) |
/// | general | `alpha`, `subgen` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub structure: StructureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgen: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone2: Option<ZoneSpec>,
}

fn need<T: Clone>(v: &Option<T>, structure: StructureKind, field: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::InvalidSpec(format!("{structure} needs '{field}'")))
}

impl ModelSpec {
    pub fn new(structure: StructureKind) -> Self {
        Self {
            structure,
            states: None,
            rate: None,
            rates: None,
            alpha: None,
            branch: None,
            shapes: None,
            subgen: None,
            cut: None,
            zone2: None,
        }
    }

    fn structure_spec(&self, zone: &ZoneSpec) -> Result<StructureSpec<f64>> {
        let s = self.structure;
        Ok(match s {
            StructureKind::Exponential => StructureSpec::Exponential { rate: need(&zone.rate, s, "rate")? },
            StructureKind::Erlang => {
                StructureSpec::Erlang { states: need(&self.states, s, "states")?, rate: need(&zone.rate, s, "rate")? }
            }
            StructureKind::Hypoexponential => StructureSpec::Hypoexponential { rates: need(&zone.rates, s, "rates")? },
            StructureKind::Hyperexponential => StructureSpec::Hyperexponential {
                alpha: need(&self.alpha, s, "alpha")?,
                rates: need(&zone.rates, s, "rates")?,
            },
            StructureKind::Coxian => {
                StructureSpec::Coxian { rates: need(&zone.rates, s, "rates")?, branch: need(&zone.branch, s, "branch")? }
            }
            StructureKind::GeneralizedCoxian => StructureSpec::GeneralizedCoxian {
                alpha: need(&self.alpha, s, "alpha")?,
                rates: need(&zone.rates, s, "rates")?,
                branch: need(&zone.branch, s, "branch")?,
            },
            StructureKind::Cf1 => {
                StructureSpec::Cf1 { alpha: need(&self.alpha, s, "alpha")?, rates: need(&zone.rates, s, "rates")? }
            }
            StructureKind::HyperErlang => {
                let shapes = need(&self.shapes, s, "shapes")?;
                let weights = need(&self.alpha, s, "alpha")?;
                let rates = need(&zone.rates, s, "rates")?;
                if weights.len() != shapes.len() || rates.len() != shapes.len() {
                    return Err(Error::InvalidSpec(format!(
                        "hyper_erlang needs one weight and one rate per shape ({} shapes, {} weights, {} rates)",
                        shapes.len(),
                        weights.len(),
                        rates.len()
                    )));
                }
                let branches = shapes
                    .iter()
                    .zip(weights.iter().zip(&rates))
                    .map(|(&shape, (&weight, &rate))| ErlangBranch { weight, shape, rate })
                    .collect();
                StructureSpec::HyperErlang { branches }
            }
            StructureKind::General => {
                StructureSpec::General { alpha: need(&self.alpha, s, "alpha")?, subgen: need(&zone.subgen, s, "subgen")? }
            }
        })
    }

    fn first_zone(&self) -> ZoneSpec {
        ZoneSpec { rate: self.rate, rates: self.rates.clone(), branch: self.branch.clone(), subgen: self.subgen.clone() }
    }

    pub fn build(&self) -> Result<FittedModel> {
        let z1 = self.structure_spec(&self.first_zone())?;
        let model = match (self.cut, &self.zone2) {
            (None, None) => FittedModel::Classical(z1.build()?),
            (Some(cut), Some(zone2)) => {
                FittedModel::OneCutPoint(OneCutPointPhaseType::from_structures(&z1, &self.structure_spec(zone2)?, cut)?)
            }
            (Some(_), None) => return Err(Error::InvalidSpec("a cut-point model needs 'zone2' parameters".into())),
            (None, Some(_)) => return Err(Error::InvalidSpec("'zone2' requires 'cut'".into())),
        };
        if let Some(m) = self.states {
            if m != model.order() {
                return Err(Error::InvalidSpec(format!("states = {m} but the parameters describe {} states", model.order())));
            }
        }
        Ok(model)
    }
}
