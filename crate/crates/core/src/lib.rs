//! Phase-type distributions: evaluation, sampling, EM fitting, one cut-point
//! models and goodness-of-fit.

pub mod dataio;
pub mod error;
pub mod fit;
pub mod gof;
pub mod lifetime;
pub mod matfun;
pub mod ocp;
pub mod phd;
pub mod scalar;

pub use error::{Error, Result};
pub use lifetime::Lifetime;
pub use scalar::Real;

pub type PhaseType64 = phd::PhaseType<f64>;
pub type PhaseType32 = phd::PhaseType<f32>;
pub type OneCutPoint64 = ocp::OneCutPointPhaseType<f64>;
pub type OneCutPoint32 = ocp::OneCutPointPhaseType<f32>;
pub type Matrix64 = matfun::Matrix<f64>;
pub type Matrix32 = matfun::Matrix<f32>;
