//! Log-log least-squares fits and the log-uniform evaluation grids shared by
//! the estimators.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// Result of fitting `y ~ exp(log_intercept) * x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Smallest and largest x that entered the fit.
    pub window: (f64, f64),
    /// Grid points discarded before fitting because their y was zero.
    pub dropped: usize,
}

/// Strictly increasing positive integers, spaced log-uniformly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<usize>,
}

impl EvalGrid {
    /// Builds a grid from explicit points, which must be strictly increasing and >= 1.
    pub fn from_points(points: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(FractalError::InvalidInput("empty grid".into()));
        }
        if points[0] == 0 || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FractalError::InvalidInput(
                "grid points must be strictly increasing and >= 1".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn min(&self) -> usize {
        self.points[0]
    }

    pub fn max(&self) -> usize {
        *self.points.last().expect("grid is never empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Log-uniformly spaced integers from `min_x` to `max_x` inclusive.
pub fn make_grid(min_x: usize, max_x: usize, points_per_decade: usize) -> Result<EvalGrid> {
    if min_x == 0 || min_x >= max_x {
        return Err(FractalError::InvalidInput(format!(
            "grid bounds must satisfy 1 <= min < max, got [{min_x}, {max_x}]"
        )));
    }
    if points_per_decade == 0 {
        return Err(FractalError::InvalidInput(
            "points per decade must be positive".into(),
        ));
    }
    let ratio = max_x as f64 / min_x as f64;
    let steps = ((points_per_decade as f64 * ratio.log10()).round() as usize).max(1);
    let mut points: Vec<usize> = (0..=steps)
        .map(|i| (min_x as f64 * ratio.powf(i as f64 / steps as f64)).round() as usize)
        .chain([min_x, max_x])
        .map(|p| p.clamp(min_x, max_x))
        .collect();
    points.sort_unstable();
    points.dedup();
    Ok(EvalGrid { points })
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(FractalError::InvalidInput(format!(
                "power-law point ({x}, {y}) must have positive finite coordinates"
            )));
        }
    }
    // Sorting makes the summation order, and therefore the result, independent
    // of input order.
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut distinct = sorted.iter().map(|p| p.0).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FractalError::InsufficientData(format!(
            "power-law fit needs at least 3 distinct x values, got {}",
            distinct.len()
        )));
    }

    let logs: Vec<(f64, f64)> = sorted.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(FractalError::DegenerateFit("zero variance in ln x".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * n {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        log_intercept: intercept,
        r_squared,
        n_points: logs.len(),
        window: (sorted[0].0, sorted[sorted.len() - 1].0),
        dropped: 0,
    })
}

/// Fits a measured curve, discarding points whose y is exactly zero.
pub fn fit_curve(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 != 0.0).collect();
    let dropped = points.len() - kept.len();
    let mut fit = fit_power_law(&kept)?;
    fit.dropped = dropped;
    Ok(fit)
}
