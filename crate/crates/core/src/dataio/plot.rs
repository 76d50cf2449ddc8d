use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifetime::Lifetime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Pdf,
    Survival,
    Hazard,
    CumHazard,
}

impl Curve {
    pub const ALL: [Curve; 4] = [Curve::Pdf, Curve::Survival, Curve::Hazard, Curve::CumHazard];

    pub fn as_str(self) -> &'static str {
        match self {
            Curve::Pdf => "pdf",
            Curve::Survival => "survival",
            Curve::Hazard => "hazard",
            Curve::CumHazard => "cum_hazard",
        }
    }

    /// Curves that may jump at a cut point.
    fn jumps(self) -> bool {
        matches!(self, Curve::Pdf | Curve::Hazard)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "pdf" | "density" => Ok(Curve::Pdf),
            "survival" | "reliability" => Ok(Curve::Survival),
            "hazard" => Ok(Curve::Hazard),
            "cum_hazard" | "cumhazard" => Ok(Curve::CumHazard),
            _ => Err(Error::InvalidSpec(format!("unknown curve '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRequest {
    pub horizon: f64,
    pub points: usize,
    pub curves: Vec<Curve>,
}

impl PlotRequest {
    pub const DEFAULT_POINTS: usize = 512;

    pub fn new(horizon: f64) -> Self {
        Self { horizon, points: Self::DEFAULT_POINTS, curves: Curve::ALL.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidSpec(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.points < 2 {
            return Err(Error::InvalidSpec(format!("points must be at least 2, got {}", self.points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub curve: Curve,
    /// `None` where the evaluator underflows.
    pub points: Vec<(f64, Option<f64>)>,
}

fn eval(model: &(impl Lifetime + ?Sized), curve: Curve, x: f64) -> Result<Option<f64>> {
    let r = match curve {
        Curve::Pdf => model.pdf(x),
        Curve::Survival => model.survival(x),
        Curve::Hazard => model.hazard(x),
        Curve::CumHazard => model.cum_hazard(x),
    };
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::TailUnderflow(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Uniform grid over `[0, horizon]`; a cut point inside the range is added
/// and carries both one-sided values for the density and hazard.
pub fn plot_series(model: &(impl Lifetime + ?Sized), req: &PlotRequest) -> Result<Vec<CurveSeries>> {
    req.validate()?;
    let n = req.points;
    let mut grid: Vec<f64> = (0..n).map(|i| req.horizon * i as f64 / (n - 1) as f64).collect();
    grid[n - 1] = req.horizon;
    let cut = model.discontinuity().filter(|&a| a > 0.0 && a <= req.horizon);
    if let Some(a) = cut {
        if !grid.contains(&a) {
            let pos = grid.partition_point(|&x| x < a);
            grid.insert(pos, a);
        }
    }
    let mut out = Vec::with_capacity(req.curves.len());
    for &curve in &req.curves {
        let mut points = Vec::with_capacity(grid.len() + 1);
        for &x in &grid {
            points.push((x, eval(model, curve, x)?));
            if Some(x) == cut && curve.jumps() {
                let (f_right, h_right) = model.right_limits().expect("cut models expose right limits");
                let right = match curve {
                    Curve::Pdf => Some(f_right),
                    _ => match h_right {
                        Ok(h) => Some(h),
                        Err(Error::TailUnderflow(_)) => None,
                        Err(e) => return Err(e),
                    },
                };
                points.push((x, right));
            }
        }
        out.push(CurveSeries { curve, points });
    }
    Ok(out)
}

/// Two-column `x,y` text; underflowed points are left empty.
pub fn series_csv(series: &CurveSeries) -> String {
    let mut s = format!("x,{}\n", series.curve);
    for (x, y) in &series.points {
        match y {
            Some(y) => s.push_str(&format!("{x},{y}\n")),
            None => s.push_str(&format!("{x},\n")),
        }
    }
    s
}
