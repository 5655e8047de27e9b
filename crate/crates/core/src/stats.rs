//! Bootstrap margins, cross-domain medians, correlation and the single-predictor
//! regressions used to compare model-level metrics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::synth::path_rng;

pub const MIN_RESAMPLES: usize = 100;
pub const MIN_BOOTSTRAP_DOCS: usize = 10;
/// Share of replicates allowed to fail before the bootstrap is abandoned.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point_estimate: f64,
    /// Standard deviation of the replicate estimates.
    pub margin: f64,
    /// 2.5% and 97.5% replicate quantiles.
    pub percentile_interval: (f64, f64),
    pub n_resamples: usize,
    pub failures: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

/// Resamples documents with replacement and re-runs `estimator` on each replicate.
///
/// Documents are put in `key` order before resampling, which makes the result
/// independent of the order they were passed in.
pub fn bootstrap_ci<T, K, KF, F>(
    docs: &[T],
    key: KF,
    estimator: F,
    config: BootstrapConfig,
) -> Result<BootstrapResult>
where
    T: Sync,
    K: Ord,
    KF: Fn(&T) -> K,
    F: Fn(&[&T]) -> Result<f64> + Sync,
{
    if docs.len() < MIN_BOOTSTRAP_DOCS {
        return Err(FractalError::InsufficientData(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_DOCS} documents, got {}",
            docs.len()
        )));
    }
    if config.resamples < MIN_RESAMPLES {
        return Err(FractalError::InvalidInput(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {}",
            config.resamples
        )));
    }
    let mut ordered: Vec<&T> = docs.iter().collect();
    ordered.sort_by_key(|d| key(d));
    let point_estimate = estimator(&ordered)?;

    let n = ordered.len();
    let replicates: Vec<Option<f64>> = (0..config.resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = path_rng(config.seed, r);
            let sample: Vec<&T> = (0..n).map(|_| ordered[rng.random_range(0..n)]).collect();
            estimator(&sample).ok().filter(|v| v.is_finite())
        })
        .collect();
    let values: Vec<f64> = replicates.iter().flatten().copied().collect();
    let failures = config.resamples - values.len();
    if failures as f64 > MAX_FAILURE_RATE * config.resamples as f64 {
        return Err(FractalError::BootstrapInstability {
            failures,
            resamples: config.resamples,
        });
    }
    let margin = sample_std(&values);
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapResult {
        point_estimate,
        margin,
        percentile_interval: (quantile(&sorted, 0.025), quantile(&sorted, 0.975)),
        n_resamples: config.resamples,
        failures,
        seed: config.seed,
    })
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median; the mean of the two central values for even counts.
pub fn median_across_domains(estimates: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(FractalError::InvalidInput("median of no values".into()));
    }
    let mut v = estimates.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Ok(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(FractalError::InvalidInput(format!(
            "pearson needs two equal-length sequences of at least 3 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(FractalError::DegenerateSeries(
            "pearson correlation of a constant sequence".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    pub p: usize,
}

/// Simple linear regression of `y` on `x` with the adjusted coefficient of
/// determination `1 - (1 - R^2)(n - 1)/(n - p - 1)`, `p = 1`.
pub fn adjusted_r2(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(FractalError::InvalidInput(format!(
            "predictor has {} values, target has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 4 {
        return Err(FractalError::InsufficientData(format!(
            "regression needs at least 4 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FractalError::DegenerateFit("constant predictor".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let p = 1usize;
    let adjusted = 1.0 - (1.0 - r_squared) * (nf - 1.0) / (nf - p as f64 - 1.0);
    Ok(RegressionResult {
        intercept,
        slope,
        r_squared,
        adjusted_r_squared: adjusted,
        n,
        p,
    })
}

/// Combined predictor `1/BPB + H`.
pub fn hb_metric(bpb: f64, h: f64) -> Result<f64> {
    if !(bpb > 0.0 && bpb.is_finite()) {
        return Err(FractalError::InvalidInput(format!(
            "bits-per-byte must be positive, got {bpb}"
        )));
    }
    Ok(1.0 / bpb + h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(resamples: usize) -> BootstrapConfig {
        BootstrapConfig {
            resamples,
            seed: 17,
        }
    }

    fn mean(v: &[&f64]) -> Result<f64> {
        Ok(v.iter().copied().sum::<f64>() / v.len() as f64)
    }

    #[test]
    fn constant_statistic_has_zero_margin() {
        let docs: Vec<f64> = (0..20).map(f64::from).collect();
        let r = bootstrap_ci(&docs, |d| d.to_bits(), |_| Ok(3.0), cfg(200)).unwrap();
        assert_eq!(r.point_estimate, 3.0);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn bootstrap_of_the_mean() {
        let docs: Vec<f64> = (1..=100).map(f64::from).collect();
        let r = bootstrap_ci(&docs, |d| d.to_bits(), mean, cfg(1000)).unwrap();
        let sigma = (docs.iter().map(|v| (v - 50.5).powi(2)).sum::<f64>() / 100.0).sqrt();
        let expected = sigma / 10.0;
        assert!((expected - 2.887).abs() < 1e-3);
        assert!((r.margin - expected).abs() < 0.2 * expected, "{}", r.margin);
        assert!((r.point_estimate - 50.5).abs() < 1e-12);
        assert!(r.percentile_interval.0 < 50.5 && r.percentile_interval.1 > 50.5);
    }

    #[test]
    fn bootstrap_is_deterministic_and_order_free() {
        let docs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let mut rev = docs.clone();
        rev.reverse();
        let key = |d: &f64| d.to_bits();
        let a = bootstrap_ci(&docs, key, mean, cfg(300)).unwrap();
        let b = bootstrap_ci(&docs, key, mean, cfg(300)).unwrap();
        let c = bootstrap_ci(&rev, key, mean, cfg(300)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn bootstrap_failure_paths() {
        let docs: Vec<f64> = (0..20).map(f64::from).collect();
        let key = |d: &f64| d.to_bits();
        assert!(bootstrap_ci(&docs, key, mean, cfg(99)).is_err());
        assert!(bootstrap_ci(&docs[..9], key, mean, cfg(100)).is_err());

        let zeros = |v: &[&f64]| v.iter().filter(|x| ***x == 0.0).count();
        // Original sample has one zero; replicates with four or more are rare.
        let rare = |v: &[&f64]| {
            if zeros(v) >= 4 {
                Err(FractalError::InsufficientData("too many zeros".into()))
            } else {
                Ok(1.0)
            }
        };
        let r = bootstrap_ci(&docs, key, rare, cfg(200)).unwrap();
        assert!(r.failures as f64 <= 0.1 * 200.0);

        // Replicates containing at least two zeros are common (~26%).
        let common = |v: &[&f64]| {
            if zeros(v) >= 2 {
                Err(FractalError::InsufficientData("too many zeros".into()))
            } else {
                Ok(1.0)
            }
        };
        assert!(matches!(
            bootstrap_ci(&docs, key, common, cfg(200)),
            Err(FractalError::BootstrapInstability { resamples: 200, .. })
        ));
    }

    #[test]
    fn median_examples() {
        let palm2_l_h = [0.68, 0.79, 0.68, 0.70, 0.74, 0.65, 0.50, 0.72];
        assert!((median_across_domains(&palm2_l_h).unwrap() - 0.69).abs() < 1e-12);
        assert_eq!(median_across_domains(&[0.5]).unwrap(), 0.5);
        assert!((median_across_domains(&[0.6, 0.8]).unwrap() - 0.7).abs() < 1e-12);
        assert!(median_across_domains(&[]).is_err());
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(FractalError::DegenerateSeries(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn regression_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [3.0, 5.0, 7.0, 9.0, 11.0];
        let r = adjusted_r2(&x, &y).unwrap();
        assert!((r.adjusted_r_squared - 1.0).abs() < 1e-12);
        assert!((r.slope - 2.0).abs() < 1e-12);

        // y symmetric around the middle of x: zero covariance, R^2 = 0
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0, 3.0, 2.0, 2.0, 3.0, 1.0];
        let r = adjusted_r2(&x, &y).unwrap();
        assert!(r.r_squared.abs() < 1e-12);
        assert!((r.adjusted_r_squared + 1.0 / 4.0).abs() < 1e-12);

        assert!(matches!(
            adjusted_r2(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]),
            Err(FractalError::DegenerateFit(_))
        ));
        assert!(adjusted_r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn hb_examples() {
        assert_eq!(hb_metric(1.0, 0.5).unwrap(), 1.5);
        assert!((hb_metric(0.61, 0.69).unwrap() - 2.3293).abs() < 1e-4);
        assert!((hb_metric(0.85, 0.64).unwrap() - 1.8165).abs() < 1e-4);
        assert!(hb_metric(0.0, 0.5).is_err());
        assert!(hb_metric(-1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_affine_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 5..30),
            shift in -5.0f64..5.0, scale in 0.1f64..10.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v.sin() + 0.1 * i as f64).collect();
            prop_assume!(a.iter().any(|v| (v - a[0]).abs() > 1e-3));
            let r = pearson(&a, &b).unwrap();
            prop_assert!((r - pearson(&b, &a).unwrap()).abs() < 1e-12);
            let moved: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            prop_assert!((r - pearson(&moved, &b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn adjusted_never_exceeds_plain(
            x in prop::collection::vec(-10.0f64..10.0, 4..20),
            noise in prop::collection::vec(-1.0f64..1.0, 20),
        ) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| 0.3 * a + e).collect();
            let r = adjusted_r2(&x, &y).unwrap();
            prop_assert!(r.adjusted_r_squared <= r.r_squared + 1e-15);
        }
    }
}
