//! Fractal parameter estimators.
//!
//! Every curve-based estimator follows the same shape: reduce each document to
//! a small table of per-scale sufficient statistics, pool those tables across
//! documents (in document order), turn the pooled table into a curve, and fit a
//! power law to the curve. Keeping the per-document tables around is what lets
//! the bootstrap re-pool resampled documents without touching the raw series.

mod correlogram;
mod joseph;
mod rescaled_range;
mod selfsim;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::powerlaw::{fit_curve, PowerLawFit};
use crate::series::{IncrementProcess, IntegralProcess};

pub use correlogram::{
    autocovariance, autocovariance_of, durbin_levinson, pacf, pooled_correlogram, Correlogram,
};
pub use joseph::{hurst_variance, joseph_exponent, HurstVariance, Joseph, MomentStats};
pub use rescaled_range::{
    hurst_rs, rescaled_range_block, MeanAdjustment, RangeStats, RescaledRange,
};
pub use selfsim::{self_similarity_exponent, CountStats, SelfSimilarity, DEFAULT_EPSILON};

/// Values of S and H outside this range are flagged.
pub const SOFT_RANGE: (f64, f64) = (0.0, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parameter {
    S,
    H,
    J,
    D,
}

impl Parameter {
    pub fn symbol(self) -> &'static str {
        match self {
            Parameter::S => "S",
            Parameter::H => "H",
            Parameter::J => "J",
            Parameter::D => "D",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalEstimate {
    pub parameter: Parameter,
    pub value: f64,
    pub fit: Option<PowerLawFit>,
    pub margin: f64,
    pub n_documents: usize,
    /// Set when an S or H value falls outside [`SOFT_RANGE`].
    pub out_of_range: bool,
}

impl FractalEstimate {
    fn from_fit(parameter: Parameter, value: f64, fit: PowerLawFit, n_documents: usize) -> Self {
        let out_of_range = matches!(parameter, Parameter::S | Parameter::H)
            && !(SOFT_RANGE.0..=SOFT_RANGE.1).contains(&value);
        if out_of_range {
            log::warn!(
                "{} = {value:.4} lies outside the soft range [{}, {}]",
                parameter.symbol(),
                SOFT_RANGE.0,
                SOFT_RANGE.1
            );
        }
        Self {
            parameter,
            value,
            fit: Some(fit),
            margin: 0.0,
            n_documents,
            out_of_range,
        }
    }
}

/// A measured curve `(scale, statistic)` and the estimate fitted to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEstimate {
    pub estimate: FractalEstimate,
    pub curve: Vec<(f64, f64)>,
}

/// An estimator that works through per-document sufficient statistics.
pub trait CurveEstimator: Sync {
    type DocStats: Send + Sync;

    fn parameter(&self) -> Parameter;

    /// Reduces one document. What the slice holds (increments or running
    /// sums) depends on the estimator.
    fn doc_stats(&self, doc: &[f64]) -> Result<Self::DocStats>;

    /// Pools per-document statistics into a `(scale, statistic)` curve.
    fn curve(&self, stats: &[&Self::DocStats]) -> Result<Vec<(f64, f64)>>;

    /// Maps the fitted log-log slope to the parameter value.
    fn value_from_slope(&self, slope: f64) -> f64 {
        slope
    }

    /// Computes statistics for all documents; output order matches input order.
    fn all_doc_stats(&self, docs: &[&[f64]]) -> Result<Vec<Self::DocStats>> {
        if docs.is_empty() {
            return Err(FractalError::InvalidInput("no documents".into()));
        }
        docs.par_iter().map(|d| self.doc_stats(d)).collect()
    }

    /// Pools statistics and fits the curve.
    fn estimate_from_stats(&self, stats: &[&Self::DocStats]) -> Result<CurveEstimate> {
        if stats.is_empty() {
            return Err(FractalError::InvalidInput("no documents".into()));
        }
        let curve = self.curve(stats)?;
        let fit = fit_curve(&curve)?;
        let value = self.value_from_slope(fit.exponent);
        Ok(CurveEstimate {
            estimate: FractalEstimate::from_fit(self.parameter(), value, fit, stats.len()),
            curve,
        })
    }

    fn estimate(&self, docs: &[&[f64]]) -> Result<CurveEstimate> {
        let stats = self.all_doc_stats(docs)?;
        let refs: Vec<&Self::DocStats> = stats.iter().collect();
        self.estimate_from_stats(&refs)
    }
}

/// `D = 2 - S`, carrying over the margin of S.
pub fn fractal_dimension(s_estimate: &FractalEstimate) -> Result<FractalEstimate> {
    if s_estimate.parameter != Parameter::S {
        return Err(FractalError::InvalidInput(format!(
            "fractal dimension needs an S estimate, got {}",
            s_estimate.parameter.symbol()
        )));
    }
    Ok(FractalEstimate {
        parameter: Parameter::D,
        value: 2.0 - s_estimate.value,
        fit: None,
        margin: s_estimate.margin,
        n_documents: s_estimate.n_documents,
        out_of_range: false,
    })
}

pub(crate) fn integral_slices(docs: &[IntegralProcess]) -> Vec<&[f64]> {
    docs.iter().map(IntegralProcess::values).collect()
}

pub(crate) fn increment_slices(docs: &[IncrementProcess]) -> Vec<&[f64]> {
    docs.iter().map(IncrementProcess::values).collect()
}

pub(crate) fn check_doc_length(len: usize, max_scale: usize) -> Result<()> {
    if len <= max_scale {
        return Err(FractalError::InvalidInput(format!(
            "document of length {len} is not longer than the largest grid point {max_scale}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s_estimate(value: f64) -> FractalEstimate {
        FractalEstimate {
            parameter: Parameter::S,
            value,
            fit: None,
            margin: 0.08,
            n_documents: 3,
            out_of_range: false,
        }
    }

    #[test]
    fn dimension_examples() {
        let d = fractal_dimension(&s_estimate(0.59)).unwrap();
        assert!((d.value - 1.41).abs() < 1e-12);
        assert_eq!(d.margin, 0.08);
        assert_eq!(d.parameter, Parameter::D);
        assert_eq!(fractal_dimension(&s_estimate(1.0)).unwrap().value, 1.0);
        assert_eq!(fractal_dimension(&s_estimate(0.5)).unwrap().value, 1.5);
    }

    #[test]
    fn dimension_needs_s() {
        let mut h = s_estimate(0.7);
        h.parameter = Parameter::H;
        assert!(fractal_dimension(&h).is_err());
    }
}
