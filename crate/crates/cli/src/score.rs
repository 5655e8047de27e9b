//! `fractal score`: raw text in, corpus JSONL with per-token log-probabilities out.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::time::Duration;

use fractal_core::ingest::{write_corpus, ScoringClient, ScoringConfig, API_KEY_ENV};
use rayon::prelude::*;
use serde::Deserialize;

use crate::args::ScoreArgs;
use crate::{exit, CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
pub struct TextRecord {
    pub doc_id: String,
    pub domain: String,
    pub text: String,
}

pub fn read_texts(path: &std::path::Path) -> CliResult<Vec<TextRecord>> {
    let file = File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TextRecord>(&line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("{}:{}: skipping line: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

pub fn run(a: &ScoreArgs, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    if a.endpoint.is_empty() {
        return Err(CliError::usage(
            "no endpoint: pass --endpoint or set FRACTAL_SCORER_URL",
        ));
    }
    let texts = read_texts(&a.input)?;
    if texts.is_empty() {
        return Err(CliError::no_data(format!(
            "no text records in {}",
            a.input.display()
        )));
    }
    let mut cfg = ScoringConfig::new(a.endpoint.clone(), a.model.clone());
    cfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    cfg.max_attempts = a.max_attempts;
    cfg.requests_per_second = a.rps;
    cfg.token_cap = a.token_cap;
    cfg.timeout = Duration::from_secs(a.timeout_secs);
    let client = ScoringClient::new(cfg);

    let results: Vec<_> = texts
        .par_iter()
        .map(|t| client.score(&t.doc_id, &t.domain, &t.text))
        .collect();
    let mut docs = Vec::new();
    let (mut failed, mut retries, mut dropped) = (0usize, 0u32, 0usize);
    for (t, r) in texts.iter().zip(results) {
        match r {
            Ok(o) => {
                retries += o.retries;
                dropped += o.dropped_positions;
                docs.push(o.document);
            }
            Err(e) => {
                log::warn!("{}: {e}", t.doc_id);
                failed += 1;
            }
        }
    }
    if docs.is_empty() {
        return Err(CliError::no_data(format!(
            "all {failed} documents failed to score"
        )));
    }
    let mut w = BufWriter::new(File::create(&a.output)?);
    write_corpus(&mut w, &docs)?;
    w.flush()?;
    writeln!(
        out,
        "scored {} of {} documents ({failed} failed, {retries} retries, {dropped} positions without log-probabilities) -> {}",
        docs.len(),
        texts.len(),
        a.output.display()
    )?;
    Ok(exit::OK)
}
