//! Self-similarity exponent from the peak probability `p_eps(tau)`, the
//! fraction of tau-increments with `|X_{t+tau} - X_t| <= eps`. For a
//! self-similar process it decays as `tau^-S`.

use crate::error::{FractalError, Result};
use crate::powerlaw::EvalGrid;
use crate::series::{tau_increment_iter, IntegralProcess};

use super::{check_doc_length, integral_slices, CurveEstimate, CurveEstimator, Parameter};

pub const DEFAULT_EPSILON: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarity {
    pub epsilon: f64,
    pub grid: EvalGrid,
}

/// Per-scale `(hits, pairs)` for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountStats {
    pub hits: Vec<u64>,
    pub pairs: Vec<u64>,
}

impl SelfSimilarity {
    pub fn new(epsilon: f64, grid: EvalGrid) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(FractalError::InvalidInput(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { epsilon, grid })
    }
}

impl CurveEstimator for SelfSimilarity {
    type DocStats = CountStats;

    fn parameter(&self) -> Parameter {
        Parameter::S
    }

    fn doc_stats(&self, doc: &[f64]) -> Result<CountStats> {
        check_doc_length(doc.len(), self.grid.max())?;
        let mut hits = Vec::with_capacity(self.grid.len());
        let mut pairs = Vec::with_capacity(self.grid.len());
        for &tau in self.grid.points() {
            let count = tau_increment_iter(doc, tau)
                .filter(|d| d.abs() <= self.epsilon)
                .count();
            hits.push(count as u64);
            pairs.push((doc.len() - tau) as u64);
        }
        Ok(CountStats { hits, pairs })
    }

    fn curve(&self, stats: &[&CountStats]) -> Result<Vec<(f64, f64)>> {
        let mut curve = Vec::with_capacity(self.grid.len());
        let mut any = false;
        for (i, &tau) in self.grid.points().iter().enumerate() {
            let hits: u64 = stats.iter().map(|s| s.hits[i]).sum();
            let pairs: u64 = stats.iter().map(|s| s.pairs[i]).sum();
            any |= hits > 0;
            curve.push((tau as f64, hits as f64 / pairs as f64));
        }
        if !any {
            return Err(FractalError::InsufficientSignal(format!(
                "no tau-increment fell within epsilon = {}; try a larger epsilon",
                self.epsilon
            )));
        }
        Ok(curve)
    }

    fn value_from_slope(&self, slope: f64) -> f64 {
        -slope
    }
}

/// Pooled estimate of S over documents.
pub fn self_similarity_exponent(
    docs: &[IntegralProcess],
    epsilon: f64,
    grid: &EvalGrid,
) -> Result<CurveEstimate> {
    SelfSimilarity::new(epsilon, grid.clone())?.estimate(&integral_slices(docs))
}
