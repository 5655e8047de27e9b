//! Autocovariance and partial autocorrelation of an increment process.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::series::IncrementProcess;

/// Lags `0..=L` with their autocovariances and, when computed, partial
/// autocorrelations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub lags: Vec<usize>,
    pub autocovariance: Vec<f64>,
    pub pacf: Vec<f64>,
}

/// Biased (divide-by-N) autocovariance around zero, lags `0..=max_lag`.
pub fn autocovariance_of(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= x.len() {
        return Err(FractalError::InvalidInput(format!(
            "max lag {max_lag} must be below the series length {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    Ok((0..=max_lag)
        .map(|k| x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect())
}

pub fn autocovariance(x: &IncrementProcess, max_lag: usize) -> Result<Correlogram> {
    let acv = autocovariance_of(x.values(), max_lag)?;
    Ok(Correlogram {
        lags: (0..=max_lag).collect(),
        autocovariance: acv,
        pacf: Vec::new(),
    })
}

/// Partial autocorrelations `phi_kk` for `k = 0..acv.len()-1` via the
/// Durbin-Levinson recursion. `phi_00 = 1`.
pub fn durbin_levinson(acv: &[f64]) -> Result<Vec<f64>> {
    if acv.is_empty() || !(acv[0] > 0.0) {
        return Err(FractalError::NumericalDegeneracy(
            "lag-0 autocovariance must be positive".into(),
        ));
    }
    let max_lag = acv.len() - 1;
    let mut out = Vec::with_capacity(acv.len());
    out.push(1.0);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut err = acv[0];
    for k in 1..=max_lag {
        let acc: f64 = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p * acv[k - 1 - j])
            .sum();
        let kk = (acv[k] - acc) / err;
        if !kk.is_finite() || kk.abs() > 1.0 + 1e-9 {
            return Err(FractalError::NumericalDegeneracy(format!(
                "partial autocorrelation {kk} at lag {k} is outside [-1, 1]"
            )));
        }
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        err *= 1.0 - kk * kk;
        out.push(kk);
        if !(err > 0.0) && k < max_lag {
            return Err(FractalError::NumericalDegeneracy(format!(
                "prediction error vanished at lag {k}"
            )));
        }
    }
    Ok(out)
}

pub fn pacf(x: &IncrementProcess, max_lag: usize) -> Result<Correlogram> {
    if 2 * max_lag >= x.len() {
        return Err(FractalError::InvalidInput(format!(
            "max lag {max_lag} must be below half the series length {}",
            x.len()
        )));
    }
    let acv = autocovariance_of(x.values(), max_lag)?;
    let pacf = durbin_levinson(&acv)?;
    Ok(Correlogram {
        lags: (0..=max_lag).collect(),
        autocovariance: acv,
        pacf,
    })
}

/// Autocovariances averaged over documents (in order), then Durbin-Levinson.
pub fn pooled_correlogram(docs: &[&[f64]], max_lag: usize) -> Result<Correlogram> {
    if docs.is_empty() {
        return Err(FractalError::InvalidInput("no documents".into()));
    }
    let mut acc = vec![0.0; max_lag + 1];
    for doc in docs {
        if 2 * max_lag >= doc.len() {
            return Err(FractalError::InvalidInput(format!(
                "max lag {max_lag} must be below half the document length {}",
                doc.len()
            )));
        }
        for (a, v) in acc.iter_mut().zip(autocovariance_of(doc, max_lag)?) {
            *a += v;
        }
    }
    let m = docs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    let pacf = durbin_levinson(&acc)?;
    Ok(Correlogram {
        lags: (0..=max_lag).collect(),
        autocovariance: acc,
        pacf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::normalize;

    #[test]
    fn alternating_lag_one() {
        let acv = autocovariance_of(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
        assert_eq!(acv, vec![1.0, -0.75]);
    }

    #[test]
    fn normalized_lag_zero_is_one() {
        let x = normalize(&[0.3, 2.0, -1.0, 4.0, 0.0, 1.5]).unwrap();
        let c = autocovariance(&x, 2).unwrap();
        assert!((c.autocovariance[0] - 1.0).abs() < 1e-9);
        assert_eq!(c.lags, vec![0, 1, 2]);
    }

    #[test]
    fn lag_bounds() {
        let x = normalize(&[0.3, 2.0, -1.0, 4.0, 0.0, 1.5]).unwrap();
        assert!(autocovariance(&x, 6).is_err());
        assert!(pacf(&x, 3).is_err());
        assert_eq!(pacf(&x, 2).unwrap().pacf[0], 1.0);
    }

    #[test]
    fn ar1_population_pacf() {
        // gamma_k = phi^k: PACF is phi at lag 1 and zero after
        let acv: Vec<f64> = (0..6).map(|k| 0.6f64.powi(k)).collect();
        let p = durbin_levinson(&acv).unwrap();
        assert!((p[1] - 0.6).abs() < 1e-12);
        for v in &p[2..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_correlogram_is_degenerate() {
        assert!(durbin_levinson(&[1.0, 1.5]).is_err());
        assert!(durbin_levinson(&[0.0, 0.0]).is_err());
    }
}
