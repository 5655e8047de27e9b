//! Per-token bit traces and the increment/integral processes derived from them.
//!
//! A language model assigns each token `w_t` a log-probability. Negated and
//! expressed in base 2 this is the token's information content `z_t` in bits.
//! Normalizing `z_t` to zero mean and unit variance gives the increment process
//! `x_t`; its running sum `X_t` is the integral process that every fractal
//! estimator in this crate works on.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// Unit of a log-probability as produced by a scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

impl LogBase {
    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Natural => "natural",
            LogBase::Base2 => "base2",
        }
    }
}

/// Per-token information content (bits) with the byte length of each token.
#[derive(Debug, Clone, PartialEq)]
pub struct BitsSeries {
    doc_id: String,
    values: Vec<f64>,
    byte_counts: Vec<u32>,
}

impl BitsSeries {
    pub fn new(doc_id: impl Into<String>, values: Vec<f64>, byte_counts: Vec<u32>) -> Result<Self> {
        if values.len() != byte_counts.len() {
            return Err(FractalError::InvalidInput(format!(
                "{} bit values but {} byte counts",
                values.len(),
                byte_counts.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(FractalError::InvalidInput(format!(
                "bit value at index {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        if let Some(i) = byte_counts.iter().position(|&b| b == 0) {
            return Err(FractalError::InvalidInput(format!(
                "byte count at index {i} is 0"
            )));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            values,
            byte_counts,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn byte_counts(&self) -> &[u32] {
        &self.byte_counts
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Zero-mean, unit (population) variance sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementProcess {
    values: Vec<f64>,
}

impl IncrementProcess {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Running sums `X_t = x_0 + ... + x_t` of an increment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralProcess {
    values: Vec<f64>,
}

impl IntegralProcess {
    /// Cumulative sums of an arbitrary increment sequence.
    ///
    /// Used directly for oracle paths whose increments are already on the
    /// unit scale; language traces go through [`normalize`] and [`integrate`].
    pub fn from_increments(increments: &[f64]) -> Result<Self> {
        if increments.is_empty() {
            return Err(FractalError::InvalidInput(
                "cannot integrate an empty sequence".into(),
            ));
        }
        let values = increments
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First differences, with the first element kept as-is.
    pub fn increments(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut prev = 0.0;
        for &v in &self.values {
            out.push(v - prev);
            prev = v;
        }
        out
    }
}

/// Converts log-probabilities into bits, `z_t = -log2 p(w_t | prefix)`.
pub fn to_bits(logprobs: &[f64], base: LogBase) -> Result<Vec<f64>> {
    let scale = match base {
        LogBase::Natural => std::f64::consts::LN_2,
        LogBase::Base2 => 1.0,
    };
    logprobs
        .iter()
        .enumerate()
        .map(|(i, &lp)| {
            if !lp.is_finite() || lp > 0.0 {
                Err(FractalError::InvalidInput(format!(
                    "log-probability at index {i} is {lp} (must be finite and <= 0)"
                )))
            } else {
                Ok((0.0 - lp) / scale)
            }
        })
        .collect()
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Rescales a sequence to zero mean and unit population variance.
pub fn normalize(z: &[f64]) -> Result<IncrementProcess> {
    if z.len() < 2 {
        return Err(FractalError::InvalidInput(format!(
            "normalization needs at least 2 values, got {}",
            z.len()
        )));
    }
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(FractalError::InvalidInput(format!(
            "value at index {i} is not finite"
        )));
    }
    let (mean, std) = mean_std(z);
    if std == 0.0 || !std.is_normal() {
        return Err(FractalError::DegenerateSeries(
            "sequence is constant (zero variance)".into(),
        ));
    }
    Ok(IncrementProcess {
        values: z.iter().map(|v| (v - mean) / std).collect(),
    })
}

pub fn integrate(x: &IncrementProcess) -> Result<IntegralProcess> {
    IntegralProcess::from_increments(&x.values)
}

/// Overlapping (stride 1) differences `X_{t+tau} - X_t`.
pub fn tau_increments(x: &IntegralProcess, tau: usize) -> Result<Vec<f64>> {
    check_tau(x.len(), tau)?;
    Ok(tau_increment_iter(&x.values, tau).collect())
}

pub(crate) fn check_tau(len: usize, tau: usize) -> Result<()> {
    if tau == 0 || tau >= len {
        return Err(FractalError::InvalidWindow { tau, len });
    }
    Ok(())
}

pub(crate) fn tau_increment_iter(values: &[f64], tau: usize) -> impl Iterator<Item = f64> + '_ {
    values[tau..]
        .iter()
        .zip(values.iter())
        .map(|(later, earlier)| later - earlier)
}

/// Total bits divided by total bytes.
pub fn bits_per_byte(z: &BitsSeries) -> Result<f64> {
    if z.is_empty() {
        return Err(FractalError::InvalidInput(
            "bits-per-byte of an empty series".into(),
        ));
    }
    let bits: f64 = z.values.iter().sum();
    let bytes: u64 = z.byte_counts.iter().map(|&b| u64::from(b)).sum();
    Ok(bits / bytes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bits_from_natural_and_base2() {
        let b = to_bits(&[0.5f64.ln()], LogBase::Natural).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12);
        let b = to_bits(&[-2.0], LogBase::Base2).unwrap();
        assert_eq!(b, vec![2.0]);
        let b = to_bits(&[-std::f64::consts::LN_10], LogBase::Natural).unwrap();
        assert!((b[0] - std::f64::consts::LOG2_10).abs() < 1e-12);
    }

    #[test]
    fn bits_reject_positive_and_nan() {
        let err = to_bits(&[-1.0, 0.1], LogBase::Natural).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
        assert!(to_bits(&[f64::NAN], LogBase::Base2).is_err());
        assert!(to_bits(&[f64::NEG_INFINITY], LogBase::Base2).is_err());
        let zero = to_bits(&[0.0, -0.0], LogBase::Natural).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0 && v.is_sign_positive()));
    }

    #[test]
    fn normalize_small_example() {
        let x = normalize(&[1.0, 2.0, 3.0]).unwrap();
        let want = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in x.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(
            normalize(&[5.0, 5.0, 5.0]),
            Err(FractalError::DegenerateSeries(_))
        ));
        assert!(matches!(
            normalize(&[1.0]),
            Err(FractalError::InvalidInput(_))
        ));
    }

    #[test]
    fn integrate_examples() {
        let x = IncrementProcess {
            values: vec![1.0, -1.0, 2.0],
        };
        assert_eq!(integrate(&x).unwrap().values(), &[1.0, 0.0, 2.0]);
        let zeros = IntegralProcess::from_increments(&[0.0; 4]).unwrap();
        assert_eq!(zeros.values(), &[0.0; 4]);
        assert_eq!(
            IntegralProcess::from_increments(&[3.5]).unwrap().values(),
            &[3.5]
        );
        assert!(IntegralProcess::from_increments(&[]).is_err());
    }

    #[test]
    fn tau_increment_examples() {
        let x = IntegralProcess {
            values: vec![0.0, 1.0, 3.0, 6.0],
        };
        assert_eq!(tau_increments(&x, 2).unwrap(), vec![3.0, 5.0]);
        assert_eq!(tau_increments(&x, 1).unwrap(), vec![1.0, 2.0, 3.0]);
        let five = IntegralProcess {
            values: vec![0.0; 5],
        };
        assert!(matches!(
            tau_increments(&five, 5),
            Err(FractalError::InvalidWindow { tau: 5, len: 5 })
        ));
        assert!(tau_increments(&five, 0).is_err());
    }

    #[test]
    fn bpb_examples() {
        let s = BitsSeries::new("a", vec![8.0, 8.0], vec![4, 4]).unwrap();
        assert_eq!(bits_per_byte(&s).unwrap(), 2.0);
        let s = BitsSeries::new("b", vec![0.0, 0.0], vec![3, 5]).unwrap();
        assert_eq!(bits_per_byte(&s).unwrap(), 0.0);
        let s = BitsSeries::new("c", vec![1.5, 2.5], vec![1, 1]).unwrap();
        assert_eq!(bits_per_byte(&s).unwrap(), 2.0);
        let empty = BitsSeries::new("d", vec![], vec![]).unwrap();
        assert!(bits_per_byte(&empty).is_err());
        assert!(BitsSeries::new("e", vec![1.0], vec![0]).is_err());
        assert!(BitsSeries::new("e", vec![-1.0], vec![1]).is_err());
        assert!(BitsSeries::new("e", vec![1.0], vec![1, 2]).is_err());
    }

    fn nonconstant() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 2..64)
            .prop_filter("non-constant", |v| mean_std(v).1 > 1e-6)
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(z in nonconstant()) {
            let once = normalize(&z).unwrap();
            let twice = normalize(once.values()).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let (m, s) = mean_std(once.values());
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((s * s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn normalize_is_affine_invariant(z in nonconstant(), a in 0.01f64..50.0, b in -20.0f64..20.0) {
            let base = normalize(&z).unwrap();
            let moved: Vec<f64> = z.iter().map(|v| a * v + b).collect();
            let other = normalize(&moved).unwrap();
            for (p, q) in base.values().iter().zip(other.values()) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }

        #[test]
        fn integrate_and_difference_are_inverse(x in prop::collection::vec(-10.0f64..10.0, 1..64)) {
            let integral = IntegralProcess::from_increments(&x).unwrap();
            prop_assert_eq!(integral.values()[0], x[0]);
            for (a, b) in integral.increments().iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn unit_tau_increments_match_brute_force(x in prop::collection::vec(-10.0f64..10.0, 2..64)) {
            let integral = IntegralProcess::from_increments(&x).unwrap();
            let got = tau_increments(&integral, 1).unwrap();
            prop_assert_eq!(got.len(), x.len() - 1);
            for t in 0..got.len() {
                // X_{t+1} - X_t = x_{t+1}
                prop_assert!((got[t] - x[t + 1]).abs() < 1e-12);
            }
        }
    }
}
