use crate::error::{Error, Result};
use crate::scalar::KahanSum;

/// Exact lifetimes with optional positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    weights: Vec<f64>,
    source: String,
}

impl Dataset {
    /// Unit-weight observations.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::weighted(values, weights)
    }

    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if values.len() != weights.len() {
            return Err(Error::data(
                weights.len().min(values.len()),
                format!("{} values but {} weights", values.len(), weights.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::data(i, format!("observation {} is not a positive finite number", values[i])));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::data(i, format!("weight {} is not a positive finite number", weights[i])));
        }
        Ok(Self { values, weights, source: String::new() })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_unit_weighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().copied().collect::<KahanSum>().value()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        let s: KahanSum = self.values.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        s.value() / self.total_weight()
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Ok(Self::weighted(self.values.iter().map(|v| v * c).collect(), self.weights.clone())?
            .with_source(self.source.clone()))
    }

    /// Distinct values in ascending order with their summed weights.
    pub fn sorted_merged(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.values.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => out.push((x, w)),
            }
        }
        out
    }
}

/// Binned counts on `(e₀, e₁], (e₁, e₂], …` with `e₀ = 0`.
///
/// The last edge may be `+∞`. `right_truncated` counts observations known to
/// exceed a finite last edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    edges: Vec<f64>,
    counts: Vec<u64>,
    right_truncated: Option<u64>,
}

impl GroupedDataset {
    pub fn new(edges: Vec<f64>, counts: Vec<u64>, right_truncated: Option<u64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::data(0, "need at least two bin edges"));
        }
        if edges[0] != 0.0 {
            return Err(Error::data(0, "bin edges must start at 0"));
        }
        if let Some(i) = edges.windows(2).position(|w| !(w[1] > w[0]) || w[0].is_nan()) {
            return Err(Error::data(i + 1, "bin edges must be strictly increasing"));
        }
        if edges[..edges.len() - 1].iter().any(|e| !e.is_finite()) {
            return Err(Error::data(0, "only the last bin edge may be infinite"));
        }
        if counts.len() + 1 != edges.len() {
            return Err(Error::data(
                counts.len(),
                format!("{} edges need {} counts, got {}", edges.len(), edges.len() - 1, counts.len()),
            ));
        }
        if right_truncated.is_some_and(|c| c > 0) && edges[edges.len() - 1].is_infinite() {
            return Err(Error::data(counts.len(), "right-truncated count needs a finite last edge"));
        }
        let total: u64 = counts.iter().sum::<u64>() + right_truncated.unwrap_or(0);
        if total == 0 {
            return Err(Error::data(0, "every bin is empty"));
        }
        Ok(Self { edges, counts, right_truncated })
    }

    /// Bins point observations; values beyond a finite last edge become the
    /// right-truncated count.
    pub fn from_dataset(data: &Dataset, edges: Vec<f64>) -> Result<Self> {
        let mut counts = vec![0u64; edges.len().saturating_sub(1)];
        let mut beyond = 0u64;
        for &x in data.values() {
            match edges[1..].iter().position(|&e| x <= e) {
                Some(k) => counts[k] += 1,
                None => beyond += 1,
            }
        }
        let last_infinite = edges.last().is_some_and(|e| e.is_infinite());
        Self::new(edges, counts, if last_infinite { None } else { Some(beyond) })
    }

    /// `bins` equal-width bins over `[0, upper]`.
    pub fn equal_width(data: &Dataset, bins: usize, upper: f64) -> Result<Self> {
        if bins == 0 || !(upper > 0.0) {
            return Err(Error::data(0, "need at least one bin and a positive upper edge"));
        }
        let edges = (0..=bins).map(|i| upper * i as f64 / bins as f64).collect();
        Self::from_dataset(data, edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn right_truncated(&self) -> Option<u64> {
        self.right_truncated
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.right_truncated.unwrap_or(0)
    }

    /// `(lower, upper, count)` for every interval, including the open tail.
    pub fn intervals(&self) -> Vec<(f64, f64, u64)> {
        let mut out: Vec<(f64, f64, u64)> =
            self.edges.windows(2).zip(&self.counts).map(|(w, &c)| (w[0], w[1], c)).collect();
        if let Some(c) = self.right_truncated {
            out.push((self.edges[self.edges.len() - 1], f64::INFINITY, c));
        }
        out
    }

    /// Interval midpoints weighted by counts; used for moment-based starts.
    pub fn approximate_mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (lo, hi, c) in self.intervals() {
            let mid = if hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo > 0.0 {
                lo * 1.5
            } else {
                1.0
            };
            num += mid * c as f64;
            den += c as f64;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(Dataset::new(vec![1.0, 0.0]), Err(Error::InvalidData { index: 1, .. })));
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
        assert!(Dataset::weighted(vec![1.0], vec![-1.0]).is_err());
    }

    #[test]
    fn merges_duplicates() {
        let d = Dataset::weighted(vec![2.0, 1.0, 2.0], vec![1.0, 1.0, 0.5]).unwrap();
        assert_eq!(d.sorted_merged(), vec![(1.0, 1.0), (2.0, 1.5)]);
    }

    #[test]
    fn grouped_validation() {
        assert!(GroupedDataset::new(vec![0.0, 1.0, 1.0], vec![1, 1], None).is_err());
        assert!(GroupedDataset::new(vec![0.5, 1.0], vec![1], None).is_err());
        assert!(GroupedDataset::new(vec![0.0, 1.0], vec![0], None).is_err());
        let g = GroupedDataset::new(vec![0.0, f64::INFINITY], vec![3], None).unwrap();
        assert_eq!(g.intervals(), vec![(0.0, f64::INFINITY, 3)]);
    }

    #[test]
    fn binning_puts_edges_in_lower_bin() {
        let d = Dataset::new(vec![0.5, 1.0, 1.5, 9.0]).unwrap();
        let g = GroupedDataset::from_dataset(&d, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.counts(), &[2, 1]);
        assert_eq!(g.right_truncated(), Some(1));
        assert_eq!(g.total(), 4);
    }
}
