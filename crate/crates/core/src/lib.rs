//! Fractal structure of token-level information traces.
//!
//! The crate turns per-token log-probabilities into a zero-mean, unit-variance
//! increment process and its running sum, then estimates four parameters:
//!
//! * the self-similarity exponent `S`, from `p_eps(tau) ~ tau^-S`,
//! * the Hurst parameter `H`, from rescaled-range analysis `R/S ~ n^H`,
//! * the Joseph exponent `J`, from `sigma_tau ~ tau^J`,
//! * the fractal dimension `D = 2 - S`.
//!
//! Synthetic fractional Gaussian noise, white noise and AR(1) series serve as
//! ground truth for the estimators, and [`stats`] provides the bootstrap and
//! the model-level regressions.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod ingest;
pub mod powerlaw;
pub mod reference;
pub mod series;
pub mod stats;
pub mod synth;

pub use error::{FractalError, Result};
pub use estimators::{
    fractal_dimension, hurst_rs, hurst_variance, joseph_exponent, self_similarity_exponent,
    Correlogram, CurveEstimate, CurveEstimator, FractalEstimate, Parameter,
};
pub use powerlaw::{fit_power_law, make_grid, EvalGrid, PowerLawFit};
pub use series::{
    bits_per_byte, integrate, normalize, tau_increments, to_bits, BitsSeries, IncrementProcess,
    IntegralProcess, LogBase,
};
pub use stats::{BootstrapConfig, BootstrapResult, RegressionResult};
pub use synth::{SynthKind, SynthSpec};
