//! Synthetic processes with known fractal parameters.
//!
//! Fractional Gaussian noise is drawn exactly with circulant embedding
//! (Davies-Harte / Wood-Chan): the fGn autocovariance is embedded in a
//! circulant matrix of size `m = 2^k >= 2n`, diagonalized by the FFT, and a
//! complex Gaussian vector is coloured by the square-root eigenvalues.
//!
//! Every path draws from its own ChaCha20 stream selected by
//! `(seed, path index)`, so output does not depend on scheduling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// Eigenvalues below this are treated as an embedding failure.
const EIGEN_TOLERANCE: f64 = -1e-8;
const MAX_LENGTH: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Fgn,
    WhiteNoise,
    Ar1,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Fgn => "fgn",
            SynthKind::WhiteNoise => "white_noise",
            SynthKind::Ar1 => "ar1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub hurst: f64,
    pub phi: f64,
    pub length: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn fgn(hurst: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Fgn,
            hurst,
            phi: 0.0,
            length,
            seed,
        }
    }

    pub fn white_noise(length: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::WhiteNoise,
            hurst: 0.5,
            phi: 0.0,
            length,
            seed,
        }
    }

    pub fn ar1(phi: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Ar1,
            hurst: 0.5,
            phi,
            length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(FractalError::InvalidInput(format!(
                "length must be >= 2, got {}",
                self.length
            )));
        }
        if self.length > MAX_LENGTH {
            return Err(FractalError::InvalidInput(format!(
                "length {} exceeds the supported maximum {MAX_LENGTH}",
                self.length
            )));
        }
        match self.kind {
            SynthKind::Fgn if !(self.hurst > 0.0 && self.hurst < 1.0) => Err(
                FractalError::InvalidInput(format!("hurst must be in (0, 1), got {}", self.hurst)),
            ),
            SynthKind::Ar1 if !(self.phi.abs() < 1.0) => Err(FractalError::InvalidInput(format!(
                "phi must be in (-1, 1), got {}",
                self.phi
            ))),
            _ => Ok(()),
        }
    }
}

/// RNG stream for one path.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// `0.5 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})`.
pub fn fgn_autocovariance(h: f64, lag: usize) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(FractalError::InvalidInput(format!(
            "hurst must be in (0, 1), got {h}"
        )));
    }
    Ok(fgn_acv_unchecked(h, lag))
}

fn fgn_acv_unchecked(h: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Exact fGn sampler with precomputed circulant eigenvalues.
pub struct FgnSampler {
    hurst: f64,
    length: usize,
    scaled_sqrt_eigen: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clamped: usize,
}

impl std::fmt::Debug for FgnSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnSampler")
            .field("hurst", &self.hurst)
            .field("length", &self.length)
            .field("embedding", &self.scaled_sqrt_eigen.len())
            .field("clamped", &self.clamped)
            .finish()
    }
}

impl FgnSampler {
    pub fn new(hurst: f64, length: usize) -> Result<Self> {
        SynthSpec::fgn(hurst, length, 0).validate()?;
        let m = (2 * length).next_power_of_two();
        let half = m / 2;
        let mut row: Vec<Complex64> = Vec::with_capacity(m);
        for k in 0..=half {
            row.push(Complex64::new(fgn_acv_unchecked(hurst, k), 0.0));
        }
        for k in (1..half).rev() {
            row.push(Complex64::new(fgn_acv_unchecked(hurst, k), 0.0));
        }
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);

        let mut clamped = 0;
        let mut scaled_sqrt_eigen = Vec::with_capacity(m);
        for (index, c) in row.iter().enumerate() {
            let lambda = c.re;
            if lambda < EIGEN_TOLERANCE {
                return Err(FractalError::EmbeddingFailure {
                    index,
                    eigenvalue: lambda,
                });
            }
            if lambda < 0.0 {
                clamped += 1;
            }
            scaled_sqrt_eigen.push((lambda.max(0.0) / m as f64).sqrt());
        }
        if clamped > 0 {
            log::warn!("fGn embedding: clamped {clamped} slightly negative eigenvalues to zero");
        }
        Ok(Self {
            hurst,
            length,
            scaled_sqrt_eigen,
            fft,
            clamped,
        })
    }

    /// Number of negative eigenvalues that were clamped to zero.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn embedding_size(&self) -> usize {
        self.scaled_sqrt_eigen.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .scaled_sqrt_eigen
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.length);
        buf.into_iter().map(|c| c.re).collect()
    }
}

pub fn white_noise_with<R: Rng>(length: usize, rng: &mut R) -> Vec<f64> {
    (0..length).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn ar1_with<R: Rng>(phi: f64, length: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(length);
    let z: f64 = rng.sample(StandardNormal);
    let mut prev = z / (1.0 - phi * phi).sqrt();
    out.push(prev);
    for _ in 1..length {
        let e: f64 = rng.sample(StandardNormal);
        prev = phi * prev + e;
        out.push(prev);
    }
    out
}

/// One fGn path (raw values: zero mean and unit variance in expectation).
pub fn fgn(spec: &SynthSpec) -> Result<Vec<f64>> {
    generate_path(spec, 0)
}

pub fn white_noise(spec: &SynthSpec) -> Result<Vec<f64>> {
    generate_path(
        &SynthSpec {
            kind: SynthKind::WhiteNoise,
            ..*spec
        },
        0,
    )
}

pub fn ar1(spec: &SynthSpec) -> Result<Vec<f64>> {
    generate_path(
        &SynthSpec {
            kind: SynthKind::Ar1,
            ..*spec
        },
        0,
    )
}

/// Path number `path_index` of a spec.
pub fn generate_path(spec: &SynthSpec, path_index: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = path_rng(spec.seed, path_index);
    Ok(match spec.kind {
        SynthKind::Fgn => FgnSampler::new(spec.hurst, spec.length)?.sample(&mut rng),
        SynthKind::WhiteNoise => white_noise_with(spec.length, &mut rng),
        SynthKind::Ar1 => ar1_with(spec.phi, spec.length, &mut rng),
    })
}

/// `count` independent paths, generated in parallel and returned in index order.
pub fn generate_paths(spec: &SynthSpec, count: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    match spec.kind {
        SynthKind::Fgn => {
            let sampler = FgnSampler::new(spec.hurst, spec.length)?;
            Ok((0..count as u64)
                .into_par_iter()
                .map(|i| sampler.sample(&mut path_rng(spec.seed, i)))
                .collect())
        }
        _ => (0..count as u64)
            .into_par_iter()
            .map(|i| generate_path(spec, i))
            .collect(),
    }
}
