//! `fractal predict`: how well BPB, median H and 1/BPB + H explain downstream
//! scores across models.

use std::fs::File;
use std::io::Write;

use fractal_core::reference::{reference_adjusted_r2, BpbSource, ModelTable};
use fractal_core::stats::{adjusted_r2, hb_metric, pearson};
use fractal_core::RegressionResult;
use serde::Serialize;

use crate::args::{PredictArgs, Predictor};
use crate::oracle::normal_equations_adjusted_r2;
use crate::{exit, CliError, CliResult};

/// Allowed gap between a reproduced and a published adjusted R^2.
pub const R2_TOLERANCE: f64 = 0.02;
pub const PEARSON_REFERENCE: f64 = 0.83;
pub const PEARSON_TOLERANCE: f64 = 0.05;
/// Allowed gap between the regression kernel and the dense normal-equations solve.
pub const KERNEL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictRow {
    pub metric: String,
    pub predictor: &'static str,
    pub regression: RegressionResult,
    pub oracle_adjusted_r_squared: f64,
    pub reference: Option<f64>,
    /// Set when a published value exists and the reproduction misses it.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictSummary {
    pub bpb_source: Option<BpbSource>,
    pub rows: Vec<PredictRow>,
    pub pearson_median_h_bpb: f64,
    pub pearson_flagged: bool,
    /// Largest |kernel - oracle| over all rows.
    pub kernel_gap: f64,
}

impl PredictSummary {
    pub fn kernel_matches(&self) -> bool {
        self.kernel_gap <= KERNEL_TOLERANCE
    }

    pub fn row(&self, metric: &str, predictor: Predictor) -> Option<&PredictRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.predictor == predictor.name())
    }
}

fn predictor_values(table: &ModelTable, p: Predictor) -> CliResult<Vec<f64>> {
    Ok(match p {
        Predictor::Bpb => table.bpb(),
        Predictor::Hurst => table.median_h(),
        Predictor::Hb => table
            .rows
            .iter()
            .map(|r| hb_metric(r.bpb, r.median_h))
            .collect::<Result<Vec<_>, _>>()?,
    })
}

/// Regressions for the chosen metrics and predictors (all when empty).
pub fn predict(
    table: &ModelTable,
    metrics: &[String],
    predictors: &[Predictor],
) -> CliResult<PredictSummary> {
    for m in metrics {
        if table.metric(m).is_none() {
            return Err(CliError::usage(format!(
                "unknown metric {m:?}; available columns: {}",
                table
                    .metrics
                    .iter()
                    .map(|c| format!("{c:?}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let metrics: Vec<String> = if metrics.is_empty() {
        table.metrics.clone()
    } else {
        metrics.to_vec()
    };
    let predictors: Vec<Predictor> = if predictors.is_empty() {
        vec![Predictor::Bpb, Predictor::Hurst, Predictor::Hb]
    } else {
        predictors.to_vec()
    };
    // Published values only describe the bundled table.
    let references = if table.bpb_source.is_some() {
        reference_adjusted_r2()?
    } else {
        Vec::new()
    };

    let mut rows = Vec::new();
    let mut kernel_gap = 0.0f64;
    for m in &metrics {
        let y = table.metric(m).expect("checked above");
        for &p in &predictors {
            let x = predictor_values(table, p)?;
            let regression = adjusted_r2(&x, &y)?;
            let oracle = normal_equations_adjusted_r2(&x, &y)
                .ok_or_else(|| CliError::new(exit::ESTIMATOR, "singular normal equations"))?;
            kernel_gap = kernel_gap.max((oracle - regression.adjusted_r_squared).abs());
            let reference = references
                .iter()
                .find(|r| &r.metric == m)
                .and_then(|r| r.by_predictor.get(p.reference_column()).copied());
            let flagged =
                reference.is_some_and(|r| (regression.adjusted_r_squared - r).abs() > R2_TOLERANCE);
            rows.push(PredictRow {
                metric: m.clone(),
                predictor: p.name(),
                regression,
                oracle_adjusted_r_squared: oracle,
                reference,
                flagged,
            });
        }
    }
    let r = pearson(&table.median_h(), &table.bpb())?;
    Ok(PredictSummary {
        bpb_source: table.bpb_source,
        rows,
        pearson_median_h_bpb: r,
        pearson_flagged: table.bpb_source.is_some()
            && (r.abs() - PEARSON_REFERENCE).abs() > PEARSON_TOLERANCE,
        kernel_gap,
    })
}

pub fn load_table(a: &PredictArgs) -> CliResult<ModelTable> {
    match &a.input {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
            Ok(ModelTable::from_reader(file)?)
        }
        None => Ok(ModelTable::bundled(a.bpb_source.into())?),
    }
}

pub fn run(a: &PredictArgs, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    let table = load_table(a)?;
    let summary = predict(&table, &a.metric, &a.predictor)?;
    match summary.bpb_source {
        Some(s) => writeln!(
            out,
            "{} models, bundled table, BPB source: {}",
            table.rows.len(),
            s.as_str()
        )?,
        None => writeln!(out, "{} models", table.rows.len())?,
    }
    writeln!(
        out,
        "{:<22} {:<9} {:>10} {:>10} {:>10}  note",
        "metric", "predictor", "adj. R2", "R2", "published"
    )?;
    for r in &summary.rows {
        let published = r
            .reference
            .map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let note = if r.flagged {
            format!("outside ±{R2_TOLERANCE} of published")
        } else {
            String::new()
        };
        writeln!(
            out,
            "{:<22} {:<9} {:>10.4} {:>10.4} {:>10}  {}",
            r.metric,
            r.predictor,
            r.regression.adjusted_r_squared,
            r.regression.r_squared,
            published,
            note
        )?;
    }
    write!(
        out,
        "Pearson(median H, BPB) = {:.4}",
        summary.pearson_median_h_bpb
    )?;
    if summary.pearson_flagged {
        write!(
            out,
            "  |r| outside {PEARSON_REFERENCE} ± {PEARSON_TOLERANCE} of published"
        )?;
    }
    writeln!(out)?;
    writeln!(
        out,
        "regression kernel vs normal equations: max gap {:.1e} ({})",
        summary.kernel_gap,
        if summary.kernel_matches() {
            "ok"
        } else {
            "MISMATCH"
        }
    )?;
    if !summary.kernel_matches() {
        return Err(CliError::new(
            exit::ESTIMATOR,
            "regression kernel disagrees with the normal-equations oracle",
        ));
    }
    Ok(exit::OK)
}
