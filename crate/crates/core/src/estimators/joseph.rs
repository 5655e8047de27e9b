//! Joseph exponent (`sigma_tau ~ tau^J`) and the variance-growth cross-check
//! for H (`Var(X_{t+n} - X_t) ~ n^{2H}`). Both read the same pooled moments of
//! the overlapping tau-increments.

use crate::error::{FractalError, Result};
use crate::powerlaw::EvalGrid;
use crate::series::{tau_increment_iter, IntegralProcess};

use super::{check_doc_length, integral_slices, CurveEstimate, CurveEstimator, Parameter};

/// Count, mean and sum of squared deviations per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStats {
    pub count: Vec<u64>,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

fn moment_stats(doc: &[f64], grid: &EvalGrid) -> Result<MomentStats> {
    check_doc_length(doc.len(), grid.max())?;
    let k = grid.len();
    let mut out = MomentStats {
        count: Vec::with_capacity(k),
        mean: Vec::with_capacity(k),
        m2: Vec::with_capacity(k),
    };
    for &tau in grid.points() {
        let n = doc.len() - tau;
        let mean = tau_increment_iter(doc, tau).sum::<f64>() / n as f64;
        let m2 = tau_increment_iter(doc, tau)
            .map(|d| (d - mean).powi(2))
            .sum::<f64>();
        out.count.push(n as u64);
        out.mean.push(mean);
        out.m2.push(m2);
    }
    Ok(out)
}

/// Pooled population variance per scale, merging documents in order.
fn pooled_variance(stats: &[&MomentStats], grid: &EvalGrid) -> Result<Vec<(f64, f64)>> {
    let mut curve = Vec::with_capacity(grid.len());
    for (i, &tau) in grid.points().iter().enumerate() {
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for s in stats {
            let nb = s.count[i] as f64;
            if nb == 0.0 {
                continue;
            }
            let total = n + nb;
            let delta = s.mean[i] - mean;
            mean += delta * nb / total;
            m2 += s.m2[i] + delta * delta * n * nb / total;
            n = total;
        }
        let var = m2 / n;
        if !(var > 0.0) {
            return Err(FractalError::DegenerateSeries(format!(
                "tau-increments at tau = {tau} have zero variance"
            )));
        }
        curve.push((tau as f64, var));
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joseph {
    pub grid: EvalGrid,
}

impl CurveEstimator for Joseph {
    type DocStats = MomentStats;

    fn parameter(&self) -> Parameter {
        Parameter::J
    }

    fn doc_stats(&self, doc: &[f64]) -> Result<MomentStats> {
        moment_stats(doc, &self.grid)
    }

    fn curve(&self, stats: &[&MomentStats]) -> Result<Vec<(f64, f64)>> {
        Ok(pooled_variance(stats, &self.grid)?
            .into_iter()
            .map(|(tau, var)| (tau, var.sqrt()))
            .collect())
    }
}

/// Variance-growth estimate of H; a cross-check, never a headline number.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstVariance {
    pub grid: EvalGrid,
}

impl CurveEstimator for HurstVariance {
    type DocStats = MomentStats;

    fn parameter(&self) -> Parameter {
        Parameter::H
    }

    fn doc_stats(&self, doc: &[f64]) -> Result<MomentStats> {
        moment_stats(doc, &self.grid)
    }

    fn curve(&self, stats: &[&MomentStats]) -> Result<Vec<(f64, f64)>> {
        pooled_variance(stats, &self.grid)
    }

    fn value_from_slope(&self, slope: f64) -> f64 {
        slope / 2.0
    }
}

pub fn joseph_exponent(docs: &[IntegralProcess], grid: &EvalGrid) -> Result<CurveEstimate> {
    Joseph { grid: grid.clone() }.estimate(&integral_slices(docs))
}

pub fn hurst_variance(docs: &[IntegralProcess], grid: &EvalGrid) -> Result<CurveEstimate> {
    HurstVariance { grid: grid.clone() }.estimate(&integral_slices(docs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerlaw::make_grid;

    #[test]
    fn pooled_moments_match_concatenated_brute_force() {
        let grid = EvalGrid::from_points(vec![1, 2, 3]).unwrap();
        let a: Vec<f64> = [0.0, 1.0, 0.5, 2.0, 1.5, 3.0].to_vec();
        let b: Vec<f64> = [1.0, -1.0, 0.0, 4.0, 2.0].to_vec();
        let sa = moment_stats(&a, &grid).unwrap();
        let sb = moment_stats(&b, &grid).unwrap();
        let var = pooled_variance(&[&sa, &sb], &grid).unwrap();
        for (i, &tau) in grid.points().iter().enumerate() {
            let all: Vec<f64> = tau_increment_iter(&a, tau)
                .chain(tau_increment_iter(&b, tau))
                .collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            let v = all.iter().map(|d| (d - m).powi(2)).sum::<f64>() / all.len() as f64;
            assert!((var[i].1 - v).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_path_is_degenerate() {
        let doc: Vec<f64> = (0..50).map(|t| 0.5 * t as f64).collect();
        let est = Joseph {
            grid: make_grid(1, 16, 4).unwrap(),
        };
        assert!(matches!(
            est.estimate(&[&doc]),
            Err(FractalError::DegenerateSeries(_))
        ));
    }
}
