//! `fractal analyze`: per-domain estimates, bootstrap margins and curve dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use fractal_core::estimators::{
    pooled_correlogram, CurveEstimator, HurstVariance, Joseph, RescaledRange, SelfSimilarity,
};
use fractal_core::ingest::{corpus_files, load_domains, EligibleDoc, FilterConfig};
use fractal_core::stats::{bootstrap_ci, MIN_BOOTSTRAP_DOCS, MIN_RESAMPLES};
use fractal_core::{
    fractal_dimension, integrate, make_grid, normalize, BootstrapConfig, BootstrapResult,
    CurveEstimate, EvalGrid, FractalError, IncrementProcess, IntegralProcess,
};
use rayon::prelude::*;

use crate::args::AnalyzeArgs;
use crate::report::{
    file_stem, write_curve, write_report, CurveFiles, DomainReport, Estimate, Estimates,
    FractalReport, GridConfig, Medians, RunConfig, ToolInfo,
};
use crate::{exit, CliError, CliResult};

/// Validated estimator settings.
pub struct Settings {
    pub filters: FilterConfig,
    pub tau_grid: EvalGrid,
    pub rs_grid: EvalGrid,
    pub selfsim: SelfSimilarity,
    pub rs: RescaledRange,
    pub joseph: Joseph,
    pub hvar: HurstVariance,
    pub bootstrap: Option<BootstrapConfig>,
}

impl Settings {
    pub fn from_args(a: &AnalyzeArgs) -> CliResult<Self> {
        let filters = FilterConfig::new(a.min_doc_tokens, a.keep_tokens, a.trim_tokens)?;
        let tau_grid = make_grid(a.tau_min, a.tau_max, a.points_per_decade)?;
        let rs_grid = make_grid(a.rs_min, a.rs_max, a.points_per_decade)?;
        let longest = tau_grid.max().max(rs_grid.max()).max(2 * a.pacf_lags);
        if a.keep_tokens <= longest {
            return Err(CliError::usage(format!(
                "--keep-tokens ({}) must exceed the largest scale or twice the PACF lags ({longest})",
                a.keep_tokens
            )));
        }
        if a.bootstrap != 0 && a.bootstrap < MIN_RESAMPLES {
            return Err(CliError::usage(format!(
                "--bootstrap must be 0 or at least {MIN_RESAMPLES}"
            )));
        }
        Ok(Self {
            filters,
            selfsim: SelfSimilarity::new(a.epsilon, tau_grid.clone())?,
            rs: RescaledRange::with_adjustment(rs_grid.clone(), a.rs_adjustment.into())?,
            joseph: Joseph {
                grid: tau_grid.clone(),
            },
            hvar: HurstVariance {
                grid: tau_grid.clone(),
            },
            tau_grid,
            rs_grid,
            bootstrap: (a.bootstrap > 0).then_some(BootstrapConfig {
                resamples: a.bootstrap,
                seed: a.seed,
            }),
        })
    }

    fn run_config(&self, a: &AnalyzeArgs) -> RunConfig {
        let grid = |g: &EvalGrid, min, max| GridConfig {
            min,
            max,
            points_per_decade: a.points_per_decade,
            points: g.points().to_vec(),
        };
        RunConfig {
            inputs: a.input.iter().map(|p| p.display().to_string()).collect(),
            filters: self.filters,
            epsilon: a.epsilon,
            tau_grid: grid(&self.tau_grid, a.tau_min, a.tau_max),
            rs_grid: grid(&self.rs_grid, a.rs_min, a.rs_max),
            rs_adjustment: match a.rs_adjustment {
                crate::args::RsAdjustment::BlockMean => "block-mean".into(),
                crate::args::RsAdjustment::LiteralPrefix => "literal-prefix".into(),
            },
            pacf_lags: a.pacf_lags,
            bootstrap_resamples: a.bootstrap,
            seed: a.seed,
            min_domain_docs: a.min_domain_docs,
            bits: "-log2 p per token".into(),
            normalization: "per document: subtract mean, divide by population std".into(),
            pooling: "per-scale counts, ranges and moments summed across documents before one fit"
                .into(),
            byte_accounting: "UTF-8 length of the token text unless token_bytes is given".into(),
        }
    }
}

/// One domain's documents after normalization.
struct Prepared {
    ids: Vec<String>,
    increments: Vec<IncrementProcess>,
    integrals: Vec<IntegralProcess>,
    skipped: usize,
    bits_per_byte: f64,
}

fn prepare(docs: &[EligibleDoc]) -> CliResult<Prepared> {
    let bits: f64 = docs
        .iter()
        .map(|d| d.bits.values().iter().sum::<f64>())
        .sum();
    let bytes: u64 = docs
        .iter()
        .map(|d| d.bits.byte_counts().iter().map(|&b| b as u64).sum::<u64>())
        .sum();
    let normalized: Vec<Option<(IncrementProcess, IntegralProcess)>> = docs
        .par_iter()
        .map(|d| match normalize(d.bits.values()) {
            Ok(inc) => integrate(&inc).map(|int| Some((inc, int))),
            Err(FractalError::DegenerateSeries(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;
    let mut p = Prepared {
        ids: Vec::new(),
        increments: Vec::new(),
        integrals: Vec::new(),
        skipped: 0,
        bits_per_byte: bits / bytes as f64,
    };
    for (doc, n) in docs.iter().zip(normalized) {
        match n {
            Some((inc, int)) => {
                p.ids.push(doc.doc_id.clone());
                p.increments.push(inc);
                p.integrals.push(int);
            }
            None => {
                log::warn!("skipping constant document {}", doc.doc_id);
                p.skipped += 1;
            }
        }
    }
    Ok(p)
}

/// Fits the pooled curve and, when requested, bootstraps over documents.
fn fit_with_margin<E: CurveEstimator>(
    est: &E,
    stats: &[E::DocStats],
    ids: &[String],
    boot: Option<BootstrapConfig>,
) -> CliResult<(CurveEstimate, Option<BootstrapResult>)> {
    let refs: Vec<&E::DocStats> = stats.iter().collect();
    let mut point = est.estimate_from_stats(&refs)?;
    let Some(cfg) = boot else {
        return Ok((point, None));
    };
    if stats.len() < MIN_BOOTSTRAP_DOCS {
        log::warn!(
            "{} documents are too few for a bootstrap margin",
            stats.len()
        );
        return Ok((point, None));
    }
    let idx: Vec<usize> = (0..stats.len()).collect();
    let result = bootstrap_ci(
        &idx,
        |&i| ids[i].as_str(),
        |sample: &[&usize]| {
            let s: Vec<&E::DocStats> = sample.iter().map(|&&i| &stats[i]).collect();
            est.estimate_from_stats(&s).map(|c| c.estimate.value)
        },
        cfg,
    )?;
    point.estimate.margin = result.margin;
    Ok((point, Some(result)))
}

fn estimate(c: CurveEstimate, b: Option<BootstrapResult>) -> Estimate {
    Estimate {
        estimate: c.estimate,
        bootstrap: b,
    }
}

fn analyze_domain(
    domain: &str,
    docs: &[EligibleDoc],
    settings: &Settings,
    pacf_lags: usize,
    out_dir: &Path,
) -> CliResult<DomainReport> {
    let p = prepare(docs)?;
    if p.increments.is_empty() {
        return Err(CliError::new(exit::ESTIMATOR, "every document is constant"));
    }
    let inc: Vec<&[f64]> = p.increments.iter().map(IncrementProcess::values).collect();
    let int: Vec<&[f64]> = p.integrals.iter().map(IntegralProcess::values).collect();
    log::info!("{domain}: {} documents", inc.len());

    let s_stats = settings.selfsim.all_doc_stats(&int)?;
    let (s, s_boot) = fit_with_margin(&settings.selfsim, &s_stats, &p.ids, settings.bootstrap)?;
    let h_stats = settings.rs.all_doc_stats(&inc)?;
    let (h, h_boot) = fit_with_margin(&settings.rs, &h_stats, &p.ids, settings.bootstrap)?;
    let j_stats = settings.joseph.all_doc_stats(&int)?;
    let (j, j_boot) = fit_with_margin(&settings.joseph, &j_stats, &p.ids, settings.bootstrap)?;
    let j_refs: Vec<_> = j_stats.iter().collect();
    let hvar = settings.hvar.estimate_from_stats(&j_refs)?.estimate.value;
    let d = fractal_dimension(&s.estimate)?;
    let pacf = pooled_correlogram(&inc, pacf_lags)?;

    let stem = file_stem(domain);
    let curves = CurveFiles {
        selfsim: format!("selfsim_{stem}.csv"),
        rs: format!("rs_{stem}.csv"),
        joseph: format!("joseph_{stem}.csv"),
        pacf: format!("pacf_{stem}.csv"),
    };
    let pairs = |c: &[(f64, f64)]| c.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>();
    write_curve(
        &out_dir.join(&curves.selfsim),
        &["tau", "p_eps"],
        &pairs(&s.curve),
    )?;
    write_curve(&out_dir.join(&curves.rs), &["n", "rs"], &pairs(&h.curve))?;
    write_curve(
        &out_dir.join(&curves.joseph),
        &["tau", "sigma"],
        &pairs(&j.curve),
    )?;
    let pacf_rows: Vec<Vec<f64>> = pacf
        .lags
        .iter()
        .zip(&pacf.autocovariance)
        .zip(&pacf.pacf)
        .map(|((&k, &a), &p)| vec![k as f64, a, p])
        .collect();
    write_curve(
        &out_dir.join(&curves.pacf),
        &["lag", "autocovariance", "pacf"],
        &pacf_rows,
    )?;

    let d_boot = s_boot.map(|b| BootstrapResult {
        point_estimate: 2.0 - b.point_estimate,
        percentile_interval: (2.0 - b.percentile_interval.1, 2.0 - b.percentile_interval.0),
        ..b
    });
    Ok(DomainReport {
        domain: domain.to_string(),
        n_documents: inc.len(),
        skipped_degenerate: p.skipped,
        bits_per_byte: p.bits_per_byte,
        estimates: Estimates {
            s: estimate(s, s_boot),
            h: estimate(h, h_boot),
            j: estimate(j, j_boot),
            d: Estimate {
                estimate: d,
                bootstrap: d_boot,
            },
        },
        hurst_variance: hvar,
        curves,
    })
}

/// Runs the analysis and writes the report and curves into `--output`.
pub fn analyze(a: &AnalyzeArgs) -> CliResult<FractalReport> {
    for p in &a.input {
        if !p.exists() {
            return Err(CliError::usage(format!(
                "input {} does not exist",
                p.display()
            )));
        }
    }
    let settings = Settings::from_args(a)?;
    let files = corpus_files(&a.input)?;
    if files.is_empty() {
        return Err(CliError::no_data(
            "no corpus files (*.jsonl) found in the inputs",
        ));
    }
    let (manifest, domains) = load_domains(&files, settings.filters, a.min_domain_docs)?;

    let eligible: usize = manifest.domains.iter().map(|d| d.documents).sum();
    let counts = || {
        manifest
            .domains
            .iter()
            .map(|d| {
                format!(
                    "{}: {} eligible, {} too short",
                    d.label, d.documents, d.rejected
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    if eligible == 0 {
        return Err(CliError::no_data(format!(
            "no document has more than {} tokens ({} files, {} malformed lines skipped) [{}]",
            settings.filters.min_tokens,
            files.len(),
            manifest.skipped_lines,
            counts()
        )));
    }
    let participating: Vec<&str> = manifest.participating().map(|d| d.label.as_str()).collect();
    if participating.is_empty() {
        return Err(CliError::no_data(format!(
            "no domain reaches --min-domain-docs {} [{}]",
            a.min_domain_docs,
            counts()
        )));
    }

    fs::create_dir_all(&a.output)?;
    let mut reports = Vec::new();
    for name in participating {
        let r = analyze_domain(name, &domains[name], &settings, a.pacf_lags, &a.output).map_err(
            |e| {
                let code = if e.code == exit::USAGE {
                    exit::ESTIMATOR
                } else {
                    e.code
                };
                CliError::new(code, e.message).context(format!("domain {name}"))
            },
        )?;
        reports.push(r);
    }
    let medians = Medians::of(&reports)?;
    let warnings = medians.soft_target_warnings();
    for w in &warnings {
        log::warn!("{w}");
    }
    let report = FractalReport {
        tool: ToolInfo::current(),
        config: settings.run_config(a),
        corpus: manifest,
        domains: reports,
        medians,
        soft_target_warnings: warnings,
    };
    write_report(&a.output, &report)?;
    Ok(report)
}

pub fn run(a: &AnalyzeArgs, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    let report = analyze(a)?;
    writeln!(
        out,
        "{:<16} {:>6} {:>16} {:>16} {:>16} {:>16}",
        "domain", "docs", "S", "H", "J", "D"
    )?;
    let fmt = |e: &Estimate| format!("{:.3} ± {:.3}", e.estimate.value, e.estimate.margin);
    for d in &report.domains {
        let e = &d.estimates;
        writeln!(
            out,
            "{:<16} {:>6} {:>16} {:>16} {:>16} {:>16}",
            d.domain,
            d.n_documents,
            fmt(&e.s),
            fmt(&e.h),
            fmt(&e.j),
            fmt(&e.d)
        )?;
    }
    let m = &report.medians;
    writeln!(
        out,
        "{:<16} {:>6} {:>16.3} {:>16.3} {:>16.3} {:>16.3}",
        "median",
        m.domains.len(),
        m.s,
        m.h,
        m.j,
        m.d
    )?;
    writeln!(
        out,
        "report written to {}",
        a.output.join(crate::report::REPORT_FILE).display()
    )?;
    Ok(exit::OK)
}
