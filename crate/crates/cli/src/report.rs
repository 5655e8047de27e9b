//! The analysis report and its curve files.

use std::fs;
use std::path::Path;

use fractal_core::ingest::{CorpusManifest, FilterConfig};
use fractal_core::stats::median_across_domains;
use fractal_core::{BootstrapResult, FractalEstimate, Result};
use serde::{Deserialize, Serialize};

pub const REPORT_FILE: &str = "report.json";

/// Language-data ranges the medians are expected to fall in.
pub const SOFT_TARGETS: [(&str, f64, f64); 3] =
    [("S", 0.4, 0.8), ("H", 0.55, 0.85), ("J", 0.35, 0.6)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalReport {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub corpus: CorpusManifest,
    pub domains: Vec<DomainReport>,
    pub medians: Medians,
    /// Medians outside the usual range for natural-language text.
    pub soft_target_warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "fractal".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: usize,
    pub max: usize,
    pub points_per_decade: usize,
    pub points: Vec<usize>,
}

/// Every setting that affects the numbers. The worker count is deliberately
/// absent: it never changes the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    pub filters: FilterConfig,
    pub epsilon: f64,
    pub tau_grid: GridConfig,
    pub rs_grid: GridConfig,
    pub rs_adjustment: String,
    pub pacf_lags: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    pub min_domain_docs: usize,
    pub bits: String,
    pub normalization: String,
    pub pooling: String,
    pub byte_accounting: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(flatten)]
    pub estimate: FractalEstimate,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    #[serde(rename = "S")]
    pub s: Estimate,
    #[serde(rename = "H")]
    pub h: Estimate,
    #[serde(rename = "J")]
    pub j: Estimate,
    #[serde(rename = "D")]
    pub d: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFiles {
    pub selfsim: String,
    pub rs: String,
    pub joseph: String,
    pub pacf: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub domain: String,
    pub n_documents: usize,
    /// Constant documents that cannot be normalized.
    pub skipped_degenerate: usize,
    pub bits_per_byte: f64,
    pub estimates: Estimates,
    /// Half the slope of the increment variance; equals J up to rounding.
    pub hurst_variance: f64,
    pub curves: CurveFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub domains: Vec<String>,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub bits_per_byte: f64,
}

impl Medians {
    /// Cross-domain medians of the given entries.
    pub fn of(domains: &[DomainReport]) -> Result<Self> {
        let pick = |f: fn(&DomainReport) -> f64| -> Result<f64> {
            median_across_domains(&domains.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            domains: domains.iter().map(|d| d.domain.clone()).collect(),
            s: pick(|d| d.estimates.s.estimate.value)?,
            h: pick(|d| d.estimates.h.estimate.value)?,
            j: pick(|d| d.estimates.j.estimate.value)?,
            d: pick(|d| d.estimates.d.estimate.value)?,
            bits_per_byte: pick(|d| d.bits_per_byte)?,
        })
    }

    pub fn soft_target_warnings(&self) -> Vec<String> {
        SOFT_TARGETS
            .iter()
            .zip([self.s, self.h, self.j])
            .filter(|((_, lo, hi), v)| !(*lo..=*hi).contains(v))
            .map(|((name, lo, hi), v)| {
                format!("median {name} = {v:.4} is outside [{lo}, {hi}], unusual for natural-language text")
            })
            .collect()
    }
}

/// File-name-safe form of a domain label.
pub fn file_stem(domain: &str) -> String {
    domain
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn write_curve(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_curve`], without its header.
pub fn read_curve(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    fractal_core::FractalError::InvalidInput(format!(
                        "{}: bad number {v:?}",
                        path.display()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_report(dir: &Path, report: &FractalReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(dir.join(REPORT_FILE), text)?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<FractalReport> {
    Ok(serde_json::from_str(&fs::read_to_string(
        dir.join(REPORT_FILE),
    )?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem("Pile-CC"), "Pile-CC");
        assert_eq!(file_stem("DM Mathematics/v2"), "DM_Mathematics_v2");
    }
}
