//! Versioned TOML documents for models and fit reports.
//!
//! Floats are written in shortest round-trip form, so reading a document back
//! reproduces every value bit for bit. Non-finite values use the string
//! tokens `"-inf"`, `"inf"` and `"nan"`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fit::{FitMethod, FitResult, FittedModel};
use crate::gof::GoFReport;
use crate::matfun::Matrix;
use crate::ocp::OneCutPointPhaseType;
use crate::phd::{PhaseType, StructureKind};

pub const MODEL_SCHEMA: &str = "phasefit.model/1";
pub const REPORT_SCHEMA: &str = "phasefit.report/1";

/// A float that survives text formats even when infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Float(pub f64);

impl Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Float {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Float;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E>(self, v: f64) -> std::result::Result<Float, E> {
                Ok(Float(v))
            }
            fn visit_i64<E>(self, v: i64) -> std::result::Result<Float, E> {
                Ok(Float(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> std::result::Result<Float, E> {
                Ok(Float(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Float, E> {
                match v {
                    "-inf" => Ok(Float(f64::NEG_INFINITY)),
                    "inf" | "+inf" => Ok(Float(f64::INFINITY)),
                    "nan" => Ok(Float(f64::NAN)),
                    _ => Err(E::invalid_value(serde::de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

pub mod float {
    use super::Float;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Float(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Float::deserialize(d)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub kind: StructureKind,
    pub states: usize,
    pub alpha: Vec<f64>,
    /// Sub-generator rows; the first zone for cut-point models.
    pub t: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<f64>,
}

impl ModelDoc {
    pub fn from_phase_type(p: &PhaseType) -> Self {
        Self { kind: p.kind(), states: p.order(), alpha: p.alpha().to_vec(), t: p.subgen().to_rows(), t2: None, cut: None }
    }

    pub fn from_ocp(p: &OneCutPointPhaseType) -> Self {
        Self {
            kind: p.kind(),
            states: p.order(),
            alpha: p.alpha().to_vec(),
            t: p.t1().to_rows(),
            t2: Some(p.t2().to_rows()),
            cut: Some(p.cut()),
        }
    }

    pub fn from_model(m: &FittedModel) -> Self {
        match m {
            FittedModel::Classical(p) => Self::from_phase_type(p),
            FittedModel::OneCutPoint(p) => Self::from_ocp(p),
        }
    }

    pub fn to_model(&self) -> Result<FittedModel> {
        let t = Matrix::from_rows(&self.t)?;
        if t.order() != self.states {
            return Err(Error::Format(format!("states = {} but T has order {}", self.states, t.order())));
        }
        match (&self.t2, self.cut) {
            (None, None) => Ok(FittedModel::Classical(PhaseType::with_kind(self.kind, self.alpha.clone(), t)?)),
            (Some(t2), Some(cut)) => Ok(FittedModel::OneCutPoint(OneCutPointPhaseType::with_kind(
                self.kind,
                self.alpha.clone(),
                t,
                Matrix::from_rows(t2)?,
                cut,
            )?)),
            _ => Err(Error::Format("cut-point models need both t2 and cut".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDoc {
    pub method: String,
    pub structure: StructureKind,
    pub states: usize,
    pub seed: u64,
    #[serde(with = "float")]
    pub loglik: f64,
    #[serde(with = "float")]
    pub aic: f64,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    pub loglik_trace: Vec<Float>,
    pub model: ModelDoc,
}

impl From<&FitResult> for FitDoc {
    fn from(r: &FitResult) -> Self {
        Self {
            method: r.method.to_string(),
            structure: r.structure(),
            states: r.states(),
            seed: r.seed,
            loglik: r.loglik,
            aic: r.aic,
            n_params: r.n_params,
            iterations: r.iterations,
            converged: r.converged,
            loglik_trace: r.loglik_trace.iter().map(|&v| Float(v)).collect(),
            model: ModelDoc::from_model(&r.model),
        }
    }
}

impl FitDoc {
    pub fn to_result(&self) -> Result<FitResult> {
        Ok(FitResult {
            method: self.method.parse::<FitMethod>().map_err(|e| Error::Format(e.to_string()))?,
            model: self.model.to_model()?,
            loglik: self.loglik,
            aic: self.aic,
            n_params: self.n_params,
            iterations: self.iterations,
            converged: self.converged,
            loglik_trace: self.loglik_trace.iter().map(|f| f.0).collect(),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofDoc {
    #[serde(with = "float")]
    pub a2: f64,
    #[serde(with = "float")]
    pub p_value: f64,
    pub method: String,
    pub n: usize,
    #[serde(with = "float")]
    pub emp_mean: f64,
    #[serde(with = "float")]
    pub emp_var: f64,
    #[serde(with = "float")]
    pub model_mean: f64,
    #[serde(with = "float")]
    pub model_var: f64,
}

impl From<&GoFReport> for GofDoc {
    fn from(g: &GoFReport) -> Self {
        Self {
            a2: g.a2,
            p_value: g.p_value,
            method: g.method.to_string(),
            n: g.n,
            emp_mean: g.emp_mean,
            emp_var: g.emp_var,
            model_mean: g.model_mean,
            model_var: g.model_var,
        }
    }
}

impl GofDoc {
    pub fn to_report(&self) -> Result<GoFReport> {
        Ok(GoFReport {
            a2: self.a2,
            p_value: self.p_value,
            method: self.method.parse().map_err(|e: Error| Error::Format(e.to_string()))?,
            n: self.n,
            emp_mean: self.emp_mean,
            emp_var: self.emp_var,
            model_mean: self.model_mean,
            model_var: self.model_var,
        })
    }
}

/// One fitted model with its optional goodness-of-fit summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub fit: FitResult,
    pub gof: Option<GoFReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub fit: FitDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gof: Option<GofDoc>,
}

impl From<&ReportEntry> for EntryDoc {
    fn from(e: &ReportEntry) -> Self {
        Self { fit: FitDoc::from(&e.fit), gof: e.gof.as_ref().map(GofDoc::from) }
    }
}

impl EntryDoc {
    pub fn to_entry(&self) -> Result<ReportEntry> {
        Ok(ReportEntry { fit: self.fit.to_result()?, gof: self.gof.as_ref().map(GofDoc::to_report).transpose()? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema: String,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    model: ModelDoc,
}

fn to_toml<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Format(e.to_string()))
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!("unsupported schema '{found}', expected '{expected}'")));
    }
    Ok(())
}

pub fn report_document(entries: &[ReportEntry]) -> Result<String> {
    if entries.is_empty() {
        return Err(Error::Format("a report needs at least one entry".into()));
    }
    to_toml(&ReportDoc { schema: REPORT_SCHEMA.into(), entries: entries.iter().map(EntryDoc::from).collect() })
}

pub fn write_report(entries: &[ReportEntry], mut dest: impl Write) -> Result<()> {
    let doc = report_document(entries)?;
    dest.write_all(doc.as_bytes())?;
    Ok(dest.flush()?)
}

pub fn write_report_file(entries: &[ReportEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = report_document(entries)?;
    std::fs::write(path, doc).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_report(text: &str) -> Result<Vec<ReportEntry>> {
    let doc: ReportDoc = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    check_schema(&doc.schema, REPORT_SCHEMA)?;
    doc.entries.iter().map(EntryDoc::to_entry).collect()
}

pub fn read_report(mut reader: impl Read) -> Result<Vec<ReportEntry>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_report(&text)
}

pub fn model_document(model: &FittedModel) -> Result<String> {
    to_toml(&ModelFile { schema: MODEL_SCHEMA.into(), model: ModelDoc::from_model(model) })
}

pub fn parse_model(text: &str) -> Result<FittedModel> {
    let doc: ModelFile = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    check_schema(&doc.schema, MODEL_SCHEMA)?;
    doc.model.to_model()
}
