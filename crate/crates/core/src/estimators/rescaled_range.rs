//! Rescaled-range (R/S) analysis.
//!
//! Each document is cut into consecutive non-overlapping blocks of length `n`.
//! Within a block the increments are mean-adjusted and accumulated; the range
//! of the accumulated deviations divided by the block's standard deviation is
//! the rescaled range. The block average grows as `n^H`.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::powerlaw::EvalGrid;
use crate::series::IncrementProcess;

use super::{check_doc_length, increment_slices, CurveEstimate, CurveEstimator, Parameter};

/// How the per-block deviations `y_t` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanAdjustment {
    /// `y_t = x_t - mean(block)`.
    #[default]
    BlockMean,
    /// `y_t = x_t - (1/t) * sum_{k<=t} x_k` with `t` clamped to 1 at the first
    /// index. Diagnostics only.
    LiteralPrefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledRange {
    pub grid: EvalGrid,
    pub adjustment: MeanAdjustment,
}

/// Per-scale `(sum of R/S, blocks used, blocks excluded for zero std)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeStats {
    pub sum_ratio: Vec<f64>,
    pub blocks: Vec<u64>,
    pub excluded: Vec<u64>,
}

impl RangeStats {
    pub fn total_excluded(&self) -> u64 {
        self.excluded.iter().sum()
    }
}

impl RescaledRange {
    pub fn new(grid: EvalGrid) -> Result<Self> {
        Self::with_adjustment(grid, MeanAdjustment::BlockMean)
    }

    pub fn with_adjustment(grid: EvalGrid, adjustment: MeanAdjustment) -> Result<Self> {
        if grid.min() < 4 {
            return Err(FractalError::InvalidInput(format!(
                "R/S block sizes must be >= 4, grid starts at {}",
                grid.min()
            )));
        }
        Ok(Self { grid, adjustment })
    }
}

/// R/S of a single block, or `None` when the block has zero spread.
pub fn rescaled_range_block(block: &[f64], adjustment: MeanAdjustment) -> Option<f64> {
    let n = block.len() as f64;
    let mean = block.iter().sum::<f64>() / n;
    let var = block.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return None;
    }
    let mut cum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut prefix = 0.0;
    for (t, &x) in block.iter().enumerate() {
        let y = match adjustment {
            MeanAdjustment::BlockMean => x - mean,
            MeanAdjustment::LiteralPrefix => {
                prefix += x;
                x - prefix / (t.max(1) as f64)
            }
        };
        cum += y;
        lo = lo.min(cum);
        hi = hi.max(cum);
    }
    Some((hi - lo) / std)
}

impl CurveEstimator for RescaledRange {
    type DocStats = RangeStats;

    fn parameter(&self) -> Parameter {
        Parameter::H
    }

    fn doc_stats(&self, doc: &[f64]) -> Result<RangeStats> {
        check_doc_length(doc.len(), self.grid.max())?;
        let k = self.grid.len();
        let mut stats = RangeStats {
            sum_ratio: Vec::with_capacity(k),
            blocks: Vec::with_capacity(k),
            excluded: Vec::with_capacity(k),
        };
        for &n in self.grid.points() {
            let (mut sum, mut used, mut skipped) = (0.0, 0u64, 0u64);
            for block in doc.chunks_exact(n) {
                match rescaled_range_block(block, self.adjustment) {
                    Some(rs) => {
                        sum += rs;
                        used += 1;
                    }
                    None => skipped += 1,
                }
            }
            stats.sum_ratio.push(sum);
            stats.blocks.push(used);
            stats.excluded.push(skipped);
        }
        Ok(stats)
    }

    fn curve(&self, stats: &[&RangeStats]) -> Result<Vec<(f64, f64)>> {
        let mut curve = Vec::with_capacity(self.grid.len());
        for (i, &n) in self.grid.points().iter().enumerate() {
            let sum: f64 = stats.iter().map(|s| s.sum_ratio[i]).sum();
            let blocks: u64 = stats.iter().map(|s| s.blocks[i]).sum();
            if blocks == 0 {
                return Err(FractalError::InsufficientData(format!(
                    "every block of size {n} has zero standard deviation"
                )));
            }
            curve.push((n as f64, sum / blocks as f64));
        }
        Ok(curve)
    }
}

/// Pooled R/S estimate of H.
pub fn hurst_rs(docs: &[IncrementProcess], grid: &EvalGrid) -> Result<CurveEstimate> {
    RescaledRange::new(grid.clone())?.estimate(&increment_slices(docs))
}
