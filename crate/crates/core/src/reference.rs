//! Bundled reference tables: published per-domain and per-model fractal
//! parameters, log-perplexities, downstream accuracies and adjusted R^2 values.
//!
//! The model-level table used for regressions has the columns
//! `model,bpb,median_h,<metric>...`; [`ModelTable::bundled`] assembles it from
//! the bundled files and [`ModelTable::from_reader`] reads a user-supplied one.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::estimators::Parameter;
use crate::stats::median_across_domains;

pub const DOMAIN_PARAMETERS_CSV: &str = include_str!("../data/domain_parameters.csv");
pub const MODEL_MEDIANS_CSV: &str = include_str!("../data/model_medians.csv");
pub const DOWNSTREAM_CSV: &str = include_str!("../data/downstream.csv");
pub const ADJUSTED_R2_CSV: &str = include_str!("../data/adjusted_r2_reference.csv");
pub const DOMAIN_NLL_CSV: &str = include_str!("../data/domain_nll.csv");
pub const DOMAIN_SELFSIM_CSV: &str = include_str!("../data/domain_selfsim.csv");
pub const DOMAIN_HURST_CSV: &str = include_str!("../data/domain_hurst.csv");
pub const DOMAIN_JOSEPH_CSV: &str = include_str!("../data/domain_joseph.csv");

/// Which per-model BPB aggregate feeds the regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BpbSource {
    /// BPB over the full validation split, as listed next to the downstream scores.
    #[default]
    Validation,
    /// Median over the eight domains of the per-domain log-perplexity. A
    /// nats-per-token proxy: per-domain byte counts are not published.
    DomainMedianNll,
}

impl BpbSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BpbSource::Validation => "validation",
            BpbSource::DomainMedianNll => "domain-median-nll",
        }
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct DomainParameter {
    pub parameter: Parameter,
    pub domain: String,
    pub value: f64,
    pub margin: f64,
}

/// Per-domain S, H and J measured with the strongest model.
pub fn domain_parameters() -> Result<Vec<DomainParameter>> {
    reader(DOMAIN_PARAMETERS_CSV)
        .deserialize()
        .map(|r| r.map_err(FractalError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ModelDomainValue {
    pub model: String,
    pub domain: String,
    pub value: f64,
    #[serde(default)]
    pub margin: f64,
}

/// Per-model, per-domain values of S, H or J.
pub fn model_domain_parameter(parameter: Parameter) -> Result<Vec<ModelDomainValue>> {
    let text = match parameter {
        Parameter::S => DOMAIN_SELFSIM_CSV,
        Parameter::H => DOMAIN_HURST_CSV,
        Parameter::J => DOMAIN_JOSEPH_CSV,
        Parameter::D => {
            return Err(FractalError::InvalidInput(
                "no bundled table for the fractal dimension".into(),
            ))
        }
    };
    reader(text)
        .deserialize()
        .map(|r| r.map_err(FractalError::from))
        .collect()
}

/// Per-model, per-domain log-perplexity in nats per token.
pub fn model_domain_nll() -> Result<Vec<ModelDomainValue>> {
    reader(DOMAIN_NLL_CSV)
        .deserialize()
        .map(|r| r.map_err(FractalError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ModelMedians {
    pub model: String,
    pub s: f64,
    pub s_margin: f64,
    pub h: f64,
    pub h_margin: f64,
    pub j: f64,
    pub j_margin: f64,
}

pub fn model_medians() -> Result<Vec<ModelMedians>> {
    reader(MODEL_MEDIANS_CSV)
        .deserialize()
        .map(|r| r.map_err(FractalError::from))
        .collect()
}

/// Published adjusted R^2 per downstream metric, keyed by predictor name.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceR2 {
    pub metric: String,
    pub by_predictor: BTreeMap<String, f64>,
}

pub fn reference_adjusted_r2() -> Result<Vec<ReferenceR2>> {
    let mut rdr = reader(ADJUSTED_R2_CSV);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut by_predictor = BTreeMap::new();
        for (h, v) in headers.iter().zip(rec.iter()).skip(1) {
            by_predictor.insert(h.to_string(), parse_number(v, h)?);
        }
        out.push(ReferenceR2 {
            metric: rec[0].to_string(),
            by_predictor,
        });
    }
    Ok(out)
}

fn parse_number(v: &str, column: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| FractalError::InvalidInput(format!("column {column}: {v:?} is not a number")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub bpb: f64,
    pub median_h: f64,
    /// Aligned with [`ModelTable::metrics`].
    pub values: Vec<f64>,
}

/// Model-level table: one row per model with BPB, median H and downstream metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelTable {
    pub metrics: Vec<String>,
    pub rows: Vec<ModelRow>,
    pub bpb_source: Option<BpbSource>,
}

impl ModelTable {
    /// Assembles the bundled 12-model table.
    pub fn bundled(source: BpbSource) -> Result<Self> {
        let medians = model_medians()?;
        let mut rdr = reader(DOWNSTREAM_CSV);
        let headers = rdr.headers()?.clone();
        let metrics: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let nll = model_domain_nll()?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let model = rec[0].to_string();
            let median_h = medians
                .iter()
                .find(|m| m.model == model)
                .ok_or_else(|| FractalError::InvalidInput(format!("no median H for {model}")))?
                .h;
            let bpb = match source {
                BpbSource::Validation => parse_number(&rec[1], "bpb")?,
                BpbSource::DomainMedianNll => {
                    let values: Vec<f64> = nll
                        .iter()
                        .filter(|r| r.model == model)
                        .map(|r| r.value)
                        .collect();
                    median_across_domains(&values)?
                }
            };
            let values = rec
                .iter()
                .skip(2)
                .zip(&metrics)
                .map(|(v, h)| parse_number(v, h))
                .collect::<Result<Vec<_>>>()?;
            rows.push(ModelRow {
                model,
                bpb,
                median_h,
                values,
            });
        }
        Ok(Self {
            metrics,
            rows,
            bpb_source: Some(source),
        })
    }

    /// Reads a `model,bpb,median_h,<metric>...` CSV.
    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = rdr.headers()?.clone();
        let expected = ["model", "bpb", "median_h"];
        if headers.len() < 4 || headers.iter().take(3).ne(expected) {
            return Err(FractalError::InvalidInput(format!(
                "model table must start with columns model,bpb,median_h and list at least one metric, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let metrics: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(3)
                .zip(&metrics)
                .map(|(v, h)| parse_number(v, h))
                .collect::<Result<Vec<_>>>()?;
            rows.push(ModelRow {
                model: rec[0].to_string(),
                bpb: parse_number(&rec[1], "bpb")?,
                median_h: parse_number(&rec[2], "median_h")?,
                values,
            });
        }
        Ok(Self {
            metrics,
            rows,
            bpb_source: None,
        })
    }

    pub fn bpb(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bpb).collect()
    }

    pub fn median_h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.median_h).collect()
    }

    /// Values of one downstream metric, or `None` for an unknown column.
    pub fn metric(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metrics.iter().position(|m| m == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_parse() {
        let params = domain_parameters().unwrap();
        assert_eq!(params.len(), 24);
        let wiki_s = params
            .iter()
            .find(|p| p.parameter == Parameter::S && p.domain == "Wikipedia")
            .unwrap();
        assert_eq!((wiki_s.value, wiki_s.margin), (0.62, 0.02));

        let h = model_domain_parameter(Parameter::H).unwrap();
        assert_eq!(h.len(), 96);
        let palm2_l: Vec<f64> = h
            .iter()
            .filter(|r| r.model == "PaLM2-L")
            .map(|r| r.value)
            .collect();
        assert_eq!(
            palm2_l,
            vec![0.68, 0.79, 0.68, 0.70, 0.74, 0.65, 0.50, 0.72]
        );
        let wiki = h
            .iter()
            .find(|r| r.model == "PaLM2-L" && r.domain == "Wikipedia")
            .unwrap();
        assert_eq!((wiki.value, wiki.margin), (0.74, 0.01));
        assert!((median_across_domains(&palm2_l).unwrap() - 0.69).abs() < 1e-12);

        assert_eq!(model_domain_nll().unwrap().len(), 96);
        assert_eq!(model_domain_parameter(Parameter::S).unwrap().len(), 96);
        assert_eq!(model_domain_parameter(Parameter::J).unwrap().len(), 96);
        assert!(model_domain_parameter(Parameter::D).is_err());
        assert_eq!(reference_adjusted_r2().unwrap().len(), 8);
    }

    #[test]
    fn table1_matches_strongest_model_rows() {
        // Domain-level table repeats the strongest model's appendix rows.
        for (param, table) in [
            (Parameter::S, model_domain_parameter(Parameter::S).unwrap()),
            (Parameter::H, model_domain_parameter(Parameter::H).unwrap()),
            (Parameter::J, model_domain_parameter(Parameter::J).unwrap()),
        ] {
            for p in domain_parameters()
                .unwrap()
                .iter()
                .filter(|p| p.parameter == param)
            {
                let row = table
                    .iter()
                    .find(|r| r.model == "PaLM2-L" && r.domain == p.domain)
                    .unwrap();
                assert_eq!(row.value, p.value, "{param:?} {}", p.domain);
            }
        }
    }

    #[test]
    fn bundled_model_table() {
        let t = ModelTable::bundled(BpbSource::Validation).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert_eq!(t.metrics.len(), 9);
        let last = t.rows.last().unwrap();
        assert_eq!(
            (last.model.as_str(), last.bpb, last.median_h),
            ("PaLM2-L", 0.61, 0.69)
        );
        assert_eq!(t.metric("3S BBH CoT").unwrap()[11], 66.66);
        assert!(t.metric("nope").is_none());

        let nll = ModelTable::bundled(BpbSource::DomainMedianNll).unwrap();
        // PaLM2-L: median of [1.75,0.46,1.23,1.88,1.22,1.43,1.08,1.36]
        assert!((nll.rows[11].bpb - (1.23 + 1.36) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn user_table_roundtrip_and_errors() {
        let text = "# comment\nmodel,bpb,median_h,acc\na,1.0,0.6,10\nb,0.8,0.65,20\n";
        let t = ModelTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t.metrics, vec!["acc"]);
        assert_eq!(t.metric("acc").unwrap(), vec![10.0, 20.0]);
        assert!(ModelTable::from_reader("model,h,bpb,acc\n".as_bytes()).is_err());
        assert!(ModelTable::from_reader("model,bpb,median_h,acc\na,x,0.6,1\n".as_bytes()).is_err());
    }
}
