//! `fractal synth`: synthetic paths as CSV files or as a corpus.

use std::fs::{self, File};
use std::io::{BufWriter, Write};

use fractal_core::ingest::{write_corpus, Document};
use fractal_core::synth::generate_paths;
use fractal_core::{LogBase, SynthSpec};

use crate::args::{SynthArgs, SynthFormat};
use crate::{exit, CliError, CliResult};

pub fn spec_from_args(a: &SynthArgs) -> CliResult<SynthSpec> {
    let spec = SynthSpec {
        kind: a.kind.into(),
        hurst: a.hurst,
        phi: a.phi,
        length: a.length,
        seed: a.seed,
    };
    spec.validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    if a.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    Ok(spec)
}

/// Turns a path into a document whose bits are an affine image of the path:
/// `logprob_t = min(x) - x_t`, so every log-probability is non-positive.
pub fn path_document(doc_id: String, domain: &str, x: &[f64]) -> fractal_core::Result<Document> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    Document::new(
        doc_id,
        domain,
        vec!["t".to_string(); x.len()],
        x.iter().map(|v| lo - v).collect(),
        None,
        LogBase::Natural,
    )
}

pub fn run(a: &SynthArgs, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    let spec = spec_from_args(a)?;
    let paths = generate_paths(&spec, a.count)?;
    let kind = spec.kind.as_str();
    match a.format {
        SynthFormat::Csv => {
            fs::create_dir_all(&a.output)?;
            for (i, x) in paths.iter().enumerate() {
                let path = a.output.join(format!("{kind}_{i:04}.csv"));
                let mut w = BufWriter::new(File::create(&path)?);
                writeln!(w, "x")?;
                for v in x {
                    writeln!(w, "{v}")?;
                }
                w.flush()?;
            }
            writeln!(
                out,
                "wrote {} paths of length {} to {}",
                a.count,
                a.length,
                a.output.display()
            )?;
        }
        SynthFormat::Jsonl => {
            if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let docs = paths
                .iter()
                .enumerate()
                .map(|(i, x)| path_document(format!("{kind}-s{}-{i:05}", a.seed), &a.domain, x))
                .collect::<Result<Vec<_>, _>>()?;
            let mut w = BufWriter::new(File::create(&a.output)?);
            write_corpus(&mut w, &docs)?;
            w.flush()?;
            writeln!(
                out,
                "wrote {} documents to {}",
                docs.len(),
                a.output.display()
            )?;
        }
    }
    Ok(exit::OK)
}
