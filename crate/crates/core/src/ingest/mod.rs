//! Token-level log-probability corpora: reading, eligibility filtering and
//! remote scoring.
//!
//! Corpus files are JSON Lines, one document per line:
//!
//! ```text
//! {"doc_id": "...", "domain": "...", "tokens": ["..."], "logprobs": [-1.2, ...],
//!  "token_bytes": [3, ...], "logprob_base": "natural" | "base2"}
//! ```
//!
//! `token_bytes` defaults to the UTF-8 length of each token and
//! `logprob_base` to `natural`.

mod remote;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::series::{to_bits, BitsSeries, LogBase};

pub use remote::{ScoreOutcome, ScoringClient, ScoringConfig, API_KEY_ENV, ENDPOINT_ENV};

/// Share of malformed lines above which a file is rejected.
pub const MAX_MALFORMED_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub domain: String,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    pub token_bytes: Vec<u32>,
    pub logprob_base: LogBase,
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    domain: String,
    tokens: Vec<String>,
    logprobs: Vec<f64>,
    #[serde(default)]
    token_bytes: Option<Vec<u32>>,
    #[serde(default)]
    logprob_base: Option<LogBase>,
}

/// UTF-8 length of a token, at least 1.
pub fn utf8_token_bytes(token: &str) -> u32 {
    (token.len() as u32).max(1)
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        domain: impl Into<String>,
        tokens: Vec<String>,
        logprobs: Vec<f64>,
        token_bytes: Option<Vec<u32>>,
        logprob_base: LogBase,
    ) -> Result<Self> {
        let token_bytes =
            token_bytes.unwrap_or_else(|| tokens.iter().map(|t| utf8_token_bytes(t)).collect());
        let doc = Self {
            doc_id: doc_id.into(),
            domain: domain.into(),
            tokens,
            logprobs,
            token_bytes,
            logprob_base,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.len() != self.logprobs.len() || self.tokens.len() != self.token_bytes.len() {
            return Err(FractalError::InvalidInput(format!(
                "document {}: {} tokens, {} logprobs, {} byte counts",
                self.doc_id,
                self.tokens.len(),
                self.logprobs.len(),
                self.token_bytes.len()
            )));
        }
        if let Some(i) = self
            .logprobs
            .iter()
            .position(|lp| !lp.is_finite() || *lp > 0.0)
        {
            return Err(FractalError::InvalidInput(format!(
                "document {}: log-probability at index {i} is {}",
                self.doc_id, self.logprobs[i]
            )));
        }
        if let Some(i) = self.token_bytes.iter().position(|&b| b == 0) {
            return Err(FractalError::InvalidInput(format!(
                "document {}: zero byte count at index {i}",
                self.doc_id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Bits (base 2) and byte counts for a token range.
    pub fn bits(&self, range: Range<usize>) -> Result<BitsSeries> {
        if range.end > self.len() || range.start > range.end {
            return Err(FractalError::InvalidInput(format!(
                "token range {range:?} outside document of {} tokens",
                self.len()
            )));
        }
        let values = to_bits(&self.logprobs[range.clone()], self.logprob_base)?;
        BitsSeries::new(
            self.doc_id.clone(),
            values,
            self.token_bytes[range].to_vec(),
        )
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn parse_line(line: &str) -> Result<Document> {
    let raw: RawDocument = serde_json::from_str(line)?;
    Document::new(
        raw.doc_id,
        raw.domain,
        raw.tokens,
        raw.logprobs,
        raw.token_bytes,
        raw.logprob_base.unwrap_or_default(),
    )
}

/// Documents read from one file plus the malformed-line tally.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRead {
    pub documents: Vec<Document>,
    pub lines: usize,
    pub skipped: usize,
}

/// Streams documents from a JSONL reader; malformed lines yield `Err` items.
pub fn documents_from<R: BufRead>(input: R) -> impl Iterator<Item = Result<Document>> {
    input.lines().filter_map(|line| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(parse_line(&l)),
        Err(e) => Some(Err(e.into())),
    })
}

pub fn read_corpus_from<R: BufRead>(input: R, label: &str) -> Result<CorpusRead> {
    let mut documents = Vec::new();
    let (mut lines, mut skipped) = (0, 0);
    for item in documents_from(input) {
        lines += 1;
        match item {
            Ok(doc) => documents.push(doc),
            Err(FractalError::Io(e)) => return Err(FractalError::Io(e)),
            Err(e) => {
                log::debug!("{label}: skipping line {lines}: {e}");
                skipped += 1;
            }
        }
    }
    if lines > 0 && skipped as f64 > MAX_MALFORMED_RATE * lines as f64 {
        return Err(FractalError::CorpusFormat {
            path: label.to_string(),
            malformed: skipped,
            total: lines,
        });
    }
    if skipped > 0 {
        log::warn!("{label}: skipped {skipped} of {lines} malformed lines");
    }
    Ok(CorpusRead {
        documents,
        lines,
        skipped,
    })
}

pub fn read_corpus(path: &Path) -> Result<CorpusRead> {
    let file = File::open(path)?;
    read_corpus_from(BufReader::new(file), &path.display().to_string())
}

pub fn write_corpus<W: Write>(mut out: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        writeln!(out, "{}", d.to_json_line()?)?;
    }
    Ok(())
}

/// Expands directories into the `.jsonl` files they contain (sorted).
pub fn corpus_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|e| e == "jsonl"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Document eligibility: keep documents longer than `min_tokens` and take
/// `keep` tokens after skipping the first `trim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub keep: usize,
    pub trim: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_tokens: 4096,
            keep: 2048,
            trim: 100,
        }
    }
}

impl FilterConfig {
    pub fn new(min_tokens: usize, keep: usize, trim: usize) -> Result<Self> {
        let cfg = Self {
            min_tokens,
            keep,
            trim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_tokens <= self.trim + 1 {
            return Err(FractalError::InvalidInput(format!(
                "min tokens ({}) must exceed trim + 1 ({})",
                self.min_tokens,
                self.trim + 1
            )));
        }
        if self.keep == 0 || self.keep > self.min_tokens - self.trim {
            return Err(FractalError::InvalidInput(format!(
                "keep ({}) must be in 1..={}",
                self.keep,
                self.min_tokens - self.trim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eligibility {
    Accepted(Range<usize>),
    Rejected { tokens: usize },
}

pub fn filter_and_trim(doc: &Document, cfg: &FilterConfig) -> Eligibility {
    if doc.len() <= cfg.min_tokens {
        Eligibility::Rejected { tokens: doc.len() }
    } else {
        Eligibility::Accepted(cfg.trim..cfg.trim + cfg.keep)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainEntry {
    pub label: String,
    pub documents: usize,
    pub rejected: usize,
    pub files: Vec<String>,
}

/// What was read, what passed the filters, and which domains take part in
/// cross-domain medians.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub domains: Vec<DomainEntry>,
    pub filters: FilterConfig,
    pub min_domain_docs: usize,
    pub skipped_lines: usize,
}

impl CorpusManifest {
    pub fn participating(&self) -> impl Iterator<Item = &DomainEntry> {
        self.domains
            .iter()
            .filter(|d| d.documents >= self.min_domain_docs)
    }
}

/// One eligible, trimmed document.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibleDoc {
    pub doc_id: String,
    pub bits: BitsSeries,
}

/// Reads every file, filters and groups eligible documents by domain.
pub fn load_domains(
    files: &[PathBuf],
    filters: FilterConfig,
    min_domain_docs: usize,
) -> Result<(CorpusManifest, BTreeMap<String, Vec<EligibleDoc>>)> {
    filters.validate()?;
    let mut by_domain: BTreeMap<String, Vec<EligibleDoc>> = BTreeMap::new();
    let mut entries: BTreeMap<String, DomainEntry> = BTreeMap::new();
    let mut skipped_lines = 0;
    for file in files {
        let read = read_corpus(file)?;
        skipped_lines += read.skipped;
        for doc in read.documents {
            let entry = entries
                .entry(doc.domain.clone())
                .or_insert_with(|| DomainEntry {
                    label: doc.domain.clone(),
                    documents: 0,
                    rejected: 0,
                    files: Vec::new(),
                });
            let name = file.display().to_string();
            if !entry.files.contains(&name) {
                entry.files.push(name);
            }
            match filter_and_trim(&doc, &filters) {
                Eligibility::Accepted(range) => {
                    entry.documents += 1;
                    let bits = doc.bits(range)?;
                    by_domain
                        .entry(doc.domain.clone())
                        .or_default()
                        .push(EligibleDoc {
                            doc_id: doc.doc_id.clone(),
                            bits,
                        });
                }
                Eligibility::Rejected { .. } => entry.rejected += 1,
            }
        }
    }
    for docs in by_domain.values_mut() {
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    }
    let manifest = CorpusManifest {
        domains: entries.into_values().collect(),
        filters,
        min_domain_docs,
        skipped_lines,
    };
    Ok((manifest, by_domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(n: usize) -> Document {
        Document::new(
            "d",
            "wiki",
            (0..n).map(|i| format!("t{i}")).collect(),
            vec![-1.0; n],
            None,
            LogBase::Natural,
        )
        .unwrap()
    }

    #[test]
    fn three_good_lines() {
        let text = r#"{"doc_id":"a","domain":"x","tokens":["ab","c"],"logprobs":[-1.0,-0.5]}
{"doc_id":"b","domain":"x","tokens":["é"],"logprobs":[-2.0],"logprob_base":"base2"}
{"doc_id":"c","domain":"y","tokens":["q"],"logprobs":[0.0],"token_bytes":[4]}
"#;
        let r = read_corpus_from(text.as_bytes(), "mem").unwrap();
        assert_eq!((r.documents.len(), r.skipped, r.lines), (3, 0, 3));
        assert_eq!(r.documents[0].token_bytes, vec![2, 1]);
        assert_eq!(r.documents[1].token_bytes, vec![2]);
        assert_eq!(r.documents[1].logprob_base, LogBase::Base2);
        assert_eq!(r.documents[2].token_bytes, vec![4]);
        // mixed bases converted independently
        let a = r.documents[0].bits(0..1).unwrap();
        let b = r.documents[1].bits(0..1).unwrap();
        assert!((a.values()[0] - 1.0 / std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(b.values()[0], 2.0);
    }

    #[test]
    fn malformed_lines_are_tallied() {
        let text = r#"{"doc_id":"a","domain":"x","tokens":["a"],"logprobs":[-1.0]}
{"doc_id":"b","domain":"x","tokens":["a"]}
{"doc_id":"c","domain":"x","tokens":["a"],"logprobs":[-1.0]}
"#;
        let r = read_corpus_from(text.as_bytes(), "mem").unwrap();
        assert_eq!((r.documents.len(), r.skipped), (2, 1));

        let bad = "{}\nnot json\n{\"doc_id\":\"a\",\"domain\":\"x\",\"tokens\":[\"a\"],\"logprobs\":[1.0]}\n";
        assert!(matches!(
            read_corpus_from(bad.as_bytes(), "mem"),
            Err(FractalError::CorpusFormat {
                malformed: 3,
                total: 3,
                ..
            })
        ));
    }

    #[test]
    fn length_mismatch_is_invalid() {
        assert!(Document::new(
            "a",
            "x",
            vec!["a".into()],
            vec![-1.0, -1.0],
            None,
            LogBase::Natural
        )
        .is_err());
        assert!(Document::new(
            "a",
            "x",
            vec!["a".into()],
            vec![-1.0],
            Some(vec![0]),
            LogBase::Natural
        )
        .is_err());
    }

    #[test]
    fn filter_examples() {
        let cfg = FilterConfig::default();
        assert_eq!(
            filter_and_trim(&doc(5000), &cfg),
            Eligibility::Accepted(100..2148)
        );
        assert_eq!(
            filter_and_trim(&doc(4096), &cfg),
            Eligibility::Rejected { tokens: 4096 }
        );
        let small = FilterConfig::new(9, 8, 0).unwrap();
        assert_eq!(
            filter_and_trim(&doc(10), &small),
            Eligibility::Accepted(0..8)
        );
        assert!(FilterConfig::new(10, 5, 9).is_err());
        assert!(FilterConfig::new(10, 8, 3).is_err());
    }

    #[test]
    fn roundtrip_preserves_fields() {
        let docs = vec![
            doc(3),
            Document::new(
                "z",
                "q",
                vec!["ü".into()],
                vec![-0.1234567890123],
                None,
                LogBase::Base2,
            )
            .unwrap(),
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &docs).unwrap();
        let back = read_corpus_from(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.documents, docs);
    }
}
