//! `fractal validate`: estimator recovery on synthetic series with known
//! parameters, plus identity and brute-force cross-checks.

use std::fs;
use std::io::Write;

use fractal_core::estimators::{
    autocovariance_of, pacf, CurveEstimator, HurstVariance, Joseph, RescaledRange, SelfSimilarity,
};
use fractal_core::stats::median_across_domains;
use fractal_core::synth::{fgn_autocovariance, generate_paths};
use fractal_core::{
    fit_power_law, fractal_dimension, make_grid, normalize, EvalGrid, FractalEstimate,
    IncrementProcess, IntegralProcess, Parameter, SynthSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Fault, ValidateArgs};
use crate::oracle::yule_walker_pacf;
use crate::{exit, CliError, CliResult};

pub const HURSTS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
pub const PATHS: usize = 50;
pub const FGN_LENGTH: usize = 1 << 16;
pub const WHITE_NOISE_LENGTH: usize = 1 << 14;
pub const SAMPLER_LENGTH: usize = 1 << 18;
pub const EPSILONS: [f64; 4] = [1e-3, 2e-3, 5e-3, 1e-2];
pub const POWER_LAW_EXPONENTS: [f64; 6] = [-1.5, -0.59, 0.0, 0.49, 0.7, 1.0];
const FAULT_BIAS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    HurstRecovery,
    JosephRecovery,
    SelfSimilarityRecovery,
    WhiteNoiseNull,
    DimensionIdentity,
    SamplerExactness,
    PowerLawFit,
    Pacf,
}

impl Group {
    pub const ALL: [Group; 8] = [
        Group::HurstRecovery,
        Group::JosephRecovery,
        Group::SelfSimilarityRecovery,
        Group::WhiteNoiseNull,
        Group::DimensionIdentity,
        Group::SamplerExactness,
        Group::PowerLawFit,
        Group::Pacf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Group::HurstRecovery => "hurst-recovery",
            Group::JosephRecovery => "joseph-recovery",
            Group::SelfSimilarityRecovery => "selfsim-recovery",
            Group::WhiteNoiseNull => "white-noise-null",
            Group::DimensionIdentity => "dimension-identity",
            Group::SamplerExactness => "sampler-exactness",
            Group::PowerLawFit => "power-law-fit",
            Group::Pacf => "pacf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub group: Group,
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(
        group: Group,
        name: impl Into<String>,
        truth: f64,
        estimate: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            group,
            name: name.into(),
            truth,
            estimate,
            tolerance,
            passed: (estimate - truth).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatteryConfig {
    pub seed: u64,
    pub tau_grid: EvalGrid,
    pub rs_grid: EvalGrid,
    pub fault: Option<Fault>,
}

impl BatteryConfig {
    pub fn from_args(a: &ValidateArgs) -> CliResult<Self> {
        let cfg = Self {
            seed: a.seed,
            tau_grid: make_grid(a.tau_min, a.tau_max, a.points_per_decade)?,
            rs_grid: make_grid(a.rs_min, a.rs_max, a.points_per_decade)?,
            fault: a.inject_fault,
        };
        if cfg.rs_grid.max() >= WHITE_NOISE_LENGTH || cfg.tau_grid.max() >= WHITE_NOISE_LENGTH {
            return Err(CliError::usage(format!(
                "grid scales must stay below the white-noise path length {WHITE_NOISE_LENGTH}"
            )));
        }
        Ok(cfg)
    }

    /// Defaults of the `validate` command.
    pub fn standard(seed: u64) -> Self {
        Self {
            seed,
            tau_grid: make_grid(1, 512, 8).expect("static grid"),
            rs_grid: make_grid(32, 4096, 8).expect("static grid"),
            fault: None,
        }
    }
}

fn paths(spec: SynthSpec) -> CliResult<(Vec<IncrementProcess>, Vec<IntegralProcess>)> {
    let raw = generate_paths(&spec, PATHS)?;
    let inc = raw
        .par_iter()
        .map(|x| normalize(x))
        .collect::<Result<Vec<_>, _>>()?;
    // The running sum of the raw path is fBm itself, with sigma_tau = tau^H.
    let int = raw
        .par_iter()
        .map(|x| IntegralProcess::from_increments(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((inc, int))
}

/// Mean over paths of the per-path rescaled-range estimate.
fn mean_rs(rs: &RescaledRange, inc: &[IncrementProcess], fault: Option<Fault>) -> CliResult<f64> {
    let values = inc
        .par_iter()
        .map(|x| rs.estimate(&[x.values()]).map(|c| c.estimate.value))
        .collect::<Result<Vec<_>, _>>()?;
    let bias = if fault == Some(Fault::RsBias) {
        FAULT_BIAS
    } else {
        0.0
    };
    Ok(values.iter().sum::<f64>() / values.len() as f64 + bias)
}

fn slices<T, F: Fn(&T) -> &[f64]>(v: &[T], f: F) -> Vec<&[f64]> {
    v.iter().map(f).collect()
}

fn fgn_checks(
    cfg: &BatteryConfig,
    checks: &mut Vec<Check>,
    s_estimates: &mut Vec<FractalEstimate>,
) -> CliResult<()> {
    let rs = RescaledRange::new(cfg.rs_grid.clone())?;
    let joseph = Joseph {
        grid: cfg.tau_grid.clone(),
    };
    let hvar = HurstVariance {
        grid: cfg.tau_grid.clone(),
    };
    for h in HURSTS {
        let (inc, int) = paths(SynthSpec::fgn(h, FGN_LENGTH, cfg.seed))?;
        let int_slices = slices(&int, IntegralProcess::values);

        let h_tol = if h >= 0.9 { 0.07 } else { 0.05 };
        checks.push(Check::new(
            Group::HurstRecovery,
            format!("R/S, fGn H={h}"),
            h,
            mean_rs(&rs, &inc, cfg.fault)?,
            h_tol,
        ));

        let stats = joseph.all_doc_stats(&int_slices)?;
        let refs: Vec<_> = stats.iter().collect();
        let j = joseph.estimate_from_stats(&refs)?.estimate.value;
        let v = hvar.estimate_from_stats(&refs)?.estimate.value;
        checks.push(Check::new(
            Group::JosephRecovery,
            format!("J, fBm H={h}"),
            h,
            j,
            0.03,
        ));
        checks.push(Check::new(
            Group::JosephRecovery,
            format!("H_var, fBm H={h}"),
            h,
            v,
            0.03,
        ));
        checks.push(Check::new(
            Group::JosephRecovery,
            format!("H_var - J, fBm H={h}"),
            0.0,
            v - j,
            1e-9,
        ));

        let mut by_eps = Vec::new();
        for eps in EPSILONS {
            let est = SelfSimilarity::new(eps, cfg.tau_grid.clone())?
                .estimate(&int_slices)?
                .estimate;
            by_eps.push((eps, est));
        }
        let s_ref = by_eps
            .iter()
            .find(|(e, _)| *e == 5e-3)
            .expect("5e-3 in EPSILONS")
            .1
            .clone();
        checks.push(Check::new(
            Group::SelfSimilarityRecovery,
            format!("S, eps=5e-3, fBm H={h}"),
            h,
            s_ref.value,
            0.08,
        ));
        let worst = by_eps
            .iter()
            .map(|(_, e)| e.value)
            .max_by(|a, b| (a - s_ref.value).abs().total_cmp(&(b - s_ref.value).abs()))
            .expect("non-empty");
        checks.push(Check::new(
            Group::SelfSimilarityRecovery,
            format!("S across eps in [1e-3, 1e-2], fBm H={h}"),
            s_ref.value,
            worst,
            0.03,
        ));
        s_estimates.extend(by_eps.into_iter().map(|(_, e)| e));
    }
    Ok(())
}

fn white_noise_checks(cfg: &BatteryConfig, checks: &mut Vec<Check>) -> CliResult<()> {
    let (inc, int) = paths(SynthSpec::white_noise(WHITE_NOISE_LENGTH, cfg.seed))?;
    let rs = RescaledRange::new(cfg.rs_grid.clone())?;
    checks.push(Check::new(
        Group::WhiteNoiseNull,
        "R/S, white noise",
        0.5,
        mean_rs(&rs, &inc, cfg.fault)?,
        0.05,
    ));
    let j = Joseph {
        grid: cfg.tau_grid.clone(),
    }
    .estimate(&slices(&int, IntegralProcess::values))?;
    checks.push(Check::new(
        Group::WhiteNoiseNull,
        "J, white noise",
        0.5,
        j.estimate.value,
        0.05,
    ));
    Ok(())
}

fn dimension_checks(s_estimates: &[FractalEstimate], checks: &mut Vec<Check>) -> CliResult<()> {
    let mut worst = 0.0f64;
    for s in s_estimates {
        let d = fractal_dimension(s)?;
        worst = worst.max((d.value - (2.0 - s.value)).abs());
    }
    checks.push(Check::new(
        Group::DimensionIdentity,
        format!("D - (2 - S) over {} estimates", s_estimates.len()),
        0.0,
        worst,
        0.0,
    ));
    let domain_s = [0.53, 0.56, 0.59, 0.61, 0.62];
    let ds = domain_s
        .iter()
        .map(|&value| {
            let s = FractalEstimate {
                parameter: Parameter::S,
                value,
                fit: None,
                margin: 0.0,
                n_documents: 0,
                out_of_range: false,
            };
            fractal_dimension(&s).map(|d| d.value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    checks.push(Check::new(
        Group::DimensionIdentity,
        "median D when median S = 0.59",
        1.41,
        median_across_domains(&ds)?,
        1e-12,
    ));
    Ok(())
}

fn sampler_checks(cfg: &BatteryConfig, checks: &mut Vec<Check>) -> CliResult<()> {
    for h in [0.5, 0.6, 0.7] {
        let x = generate_paths(&SynthSpec::fgn(h, SAMPLER_LENGTH, cfg.seed), 1)?.remove(0);
        // Around the known zero mean, so only sampling error remains.
        let acv = autocovariance_of(&x, 10)?;
        let mut worst = 0.0f64;
        for (k, a) in acv.iter().enumerate().skip(1) {
            worst = worst.max((a - fgn_autocovariance(h, k)?).abs());
        }
        checks.push(Check::new(
            Group::SamplerExactness,
            format!("max |acv - closed form|, lags 1-10, H={h}"),
            0.0,
            worst,
            0.02,
        ));
    }
    checks.push(Check::new(
        Group::SamplerExactness,
        "closed-form rho(1), H=0.7",
        0.3195,
        fgn_autocovariance(0.7, 1)?,
        1e-4,
    ));
    Ok(())
}

fn power_law_checks(checks: &mut Vec<Check>) -> CliResult<()> {
    let grid = make_grid(1, 1024, 8)?;
    for c in POWER_LAW_EXPONENTS {
        let pts: Vec<(f64, f64)> = grid
            .points()
            .iter()
            .map(|&x| (x as f64, 3.0 * (x as f64).powf(c)))
            .collect();
        checks.push(Check::new(
            Group::PowerLawFit,
            format!("exponent of 3 x^{c}"),
            c,
            fit_power_law(&pts)?.exponent,
            1e-10,
        ));
    }
    Ok(())
}

fn pacf_checks(cfg: &BatteryConfig, checks: &mut Vec<Check>) -> CliResult<()> {
    let x = generate_paths(&SynthSpec::ar1(0.6, 100_000, cfg.seed), 1)?.remove(0);
    let p = pacf(&normalize(&x)?, 5)?.pacf;
    checks.push(Check::new(
        Group::Pacf,
        "AR(1) phi=0.6, lag 1",
        0.6,
        p[1],
        0.03,
    ));
    for (k, v) in p.iter().enumerate().skip(2) {
        checks.push(Check::new(
            Group::Pacf,
            format!("AR(1) phi=0.6, lag {k}"),
            0.0,
            *v,
            0.02,
        ));
    }

    let mut worst = 0.0f64;
    let mut count = 0;
    for (i, len) in (64..=512).step_by(32).enumerate() {
        let phi = -0.8 + 0.1 * i as f64;
        let spec = SynthSpec::ar1(phi, len, cfg.seed.wrapping_add(i as u64));
        let c = pacf(&normalize(&generate_paths(&spec, 1)?.remove(0))?, 12)?;
        let oracle = yule_walker_pacf(&c.autocovariance, 12)
            .ok_or_else(|| CliError::new(exit::ESTIMATOR, "singular Yule-Walker system"))?;
        for (a, b) in c.pacf.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
        count += 1;
    }
    checks.push(Check::new(
        Group::Pacf,
        format!("Durbin-Levinson vs dense solve, {count} series, n <= 512"),
        0.0,
        worst,
        1e-8,
    ));
    Ok(())
}

/// Runs every check. Output depends only on the configuration, not on the
/// number of worker threads.
pub fn run_battery(cfg: &BatteryConfig) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let mut s_estimates = Vec::new();
    fgn_checks(cfg, &mut checks, &mut s_estimates)?;
    white_noise_checks(cfg, &mut checks)?;
    dimension_checks(&s_estimates, &mut checks)?;
    sampler_checks(cfg, &mut checks)?;
    power_law_checks(&mut checks)?;
    pacf_checks(cfg, &mut checks)?;
    checks.sort_by_key(|c| c.group);
    Ok(checks)
}

pub fn write_table(checks: &[Check], out: &mut (dyn Write + Send)) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<20} {:<52} {:>12} {:>12} {:>10} {:>10}  verdict",
        "group", "check", "truth", "estimate", "|error|", "tolerance"
    )?;
    for c in checks {
        writeln!(
            out,
            "{:<20} {:<52} {:>12.6} {:>12.6} {:>10.2e} {:>10.1e}  {}",
            c.group.label(),
            c.name,
            c.truth,
            c.estimate,
            (c.estimate - c.truth).abs(),
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        )?;
    }
    Ok(())
}

pub fn run(a: &ValidateArgs, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    let cfg = BatteryConfig::from_args(a)?;
    let checks = run_battery(&cfg)?;
    write_table(&checks, out)?;
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    writeln!(
        out,
        "{} of {} checks passed (seed {})",
        checks.len() - failed.len(),
        checks.len(),
        cfg.seed
    )?;
    if let Some(path) = &a.output {
        let mut text =
            serde_json::to_string_pretty(&checks).map_err(fractal_core::FractalError::from)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    if failed.is_empty() {
        return Ok(exit::OK);
    }
    writeln!(out, "failing rows:")?;
    for c in &failed {
        writeln!(
            out,
            "  {} / {}: estimate {} vs truth {} (tolerance {})",
            c.group.label(),
            c.name,
            c.estimate,
            c.truth,
            c.tolerance
        )?;
    }
    Ok(exit::VALIDATION_FAILED)
}
