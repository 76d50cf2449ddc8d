//! Named target densities for density fitting.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{Continuous, ContinuousCDF, Erlang, Exp, Gamma, LogNormal, Weibull};

use crate::error::{Error, Result};

/// A parametric density on the half-line, written `family:p1,p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Exponential { rate: f64 },
    Erlang { shape: u64, rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

enum Dist {
    Exp(Exp),
    Erlang(Erlang),
    Gamma(Gamma),
    Weibull(Weibull),
    LogNormal(LogNormal),
}

impl Target {
    fn invalid(&self, e: impl fmt::Display) -> Error {
        Error::InvalidSpec(format!("target {self}: {e}"))
    }

    fn dist(&self) -> Result<Dist> {
        Ok(match *self {
            Target::Exponential { rate } => Dist::Exp(Exp::new(rate).map_err(|e| self.invalid(e))?),
            Target::Erlang { shape, rate } => Dist::Erlang(Erlang::new(shape, rate).map_err(|e| self.invalid(e))?),
            Target::Gamma { shape, rate } => Dist::Gamma(Gamma::new(shape, rate).map_err(|e| self.invalid(e))?),
            Target::Weibull { shape, scale } => Dist::Weibull(Weibull::new(shape, scale).map_err(|e| self.invalid(e))?),
            Target::LogNormal { mu, sigma } => Dist::LogNormal(LogNormal::new(mu, sigma).map_err(|e| self.invalid(e))?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dist().map(|_| ())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.dist() {
            Ok(Dist::Exp(d)) => d.pdf(x),
            Ok(Dist::Erlang(d)) => d.pdf(x),
            Ok(Dist::Gamma(d)) => d.pdf(x),
            Ok(Dist::Weibull(d)) => d.pdf(x),
            Ok(Dist::LogNormal(d)) => d.pdf(x),
            Err(_) => f64::NAN,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.dist() {
            Ok(Dist::Exp(d)) => d.cdf(x),
            Ok(Dist::Erlang(d)) => d.cdf(x),
            Ok(Dist::Gamma(d)) => d.cdf(x),
            Ok(Dist::Weibull(d)) => d.cdf(x),
            Ok(Dist::LogNormal(d)) => d.cdf(x),
            Err(_) => f64::NAN,
        }
    }

    /// Doubles a scale guess until all but `1e-9` of the mass lies below it.
    pub fn default_horizon(&self) -> Result<f64> {
        self.validate()?;
        let mut h = match *self {
            Target::Exponential { rate } => 1.0 / rate,
            Target::Erlang { shape, rate } => shape as f64 / rate,
            Target::Gamma { shape, rate } => shape / rate,
            Target::Weibull { scale, .. } => scale,
            Target::LogNormal { mu, .. } => mu.exp(),
        };
        while self.cdf(h) < 1.0 - 1e-9 {
            h *= 2.0;
            if !h.is_finite() {
                return Err(Error::Domain(format!("target {self} has no finite horizon")));
            }
        }
        Ok(h)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::Exponential { rate } => write!(f, "exponential:{rate}"),
            Target::Erlang { shape, rate } => write!(f, "erlang:{shape},{rate}"),
            Target::Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
            Target::Weibull { shape, scale } => write!(f, "weibull:{shape},{scale}"),
            Target::LogNormal { mu, sigma } => write!(f, "lognormal:{mu},{sigma}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("target '{s}' is not of the form family:p1[,p2]"));
        let (family, params) = s.trim().split_once(':').ok_or_else(bad)?;
        let p: Vec<f64> = params.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let target = match (family.to_ascii_lowercase().as_str(), p.as_slice()) {
            ("exponential" | "exp", &[rate]) => Target::Exponential { rate },
            ("erlang", &[shape, rate]) if shape >= 1.0 && shape.fract() == 0.0 => {
                Target::Erlang { shape: shape as u64, rate }
            }
            ("gamma", &[shape, rate]) => Target::Gamma { shape, rate },
            ("weibull", &[shape, scale]) => Target::Weibull { shape, scale },
            ("lognormal", &[mu, sigma]) => Target::LogNormal { mu, sigma },
            _ => return Err(bad()),
        };
        target.validate()?;
        Ok(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let t: Target = "weibull:3,0.5".parse().unwrap();
        assert_eq!(t, Target::Weibull { shape: 3.0, scale: 0.5 });
        assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        assert!("weibull:3".parse::<Target>().is_err());
        assert!("erlang:2.5,1".parse::<Target>().is_err());
        assert!("gamma:-1,1".parse::<Target>().is_err());
    }

    #[test]
    fn closed_forms() {
        let w = Target::Weibull { shape: 3.0, scale: 0.5 };
        let x: f64 = 0.4;
        assert!((w.pdf(x) - 6.0 * (x / 0.5).powi(2) * (-(x / 0.5).powi(3)).exp()).abs() < 1e-12);
        let e = Target::Erlang { shape: 2, rate: 1.0 };
        assert!((e.cdf(1.0) - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-12);
        let h = Target::Exponential { rate: 1.0 }.default_horizon().unwrap();
        assert_eq!(h, 32.0);
    }
}
