use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fractal_core::estimators::MeanAdjustment;
use fractal_core::reference::BpbSource;
use fractal_core::SynthKind;

#[derive(Debug, Parser)]
#[command(
    name = "fractal",
    version,
    about = "Fractal structure of token-level information traces"
)]
pub struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate S, H, J and D per domain of a scored corpus.
    Analyze(AnalyzeArgs),
    /// Generate synthetic paths (fGn, white noise, AR(1)).
    Synth(SynthArgs),
    /// Run the estimator recovery battery against synthetic ground truth.
    Validate(ValidateArgs),
    /// Regress downstream scores on BPB, median H and 1/BPB + H.
    Predict(PredictArgs),
    /// Score raw text against a completions endpoint and write a corpus.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Corpus files or directories of `.jsonl` files.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,

    /// Directory for report.json and the curve CSVs.
    #[arg(long, default_value = "fractal-report")]
    pub output: PathBuf,

    #[arg(long, default_value_t = 4096)]
    pub min_doc_tokens: usize,

    #[arg(long, default_value_t = 2048)]
    pub keep_tokens: usize,

    #[arg(long, default_value_t = 100)]
    pub trim_tokens: usize,

    #[arg(long, default_value_t = 5e-3)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 1)]
    pub tau_min: usize,

    #[arg(long, default_value_t = 512)]
    pub tau_max: usize,

    #[arg(long, default_value_t = 8)]
    pub rs_min: usize,

    #[arg(long, default_value_t = 1024)]
    pub rs_max: usize,

    #[arg(long, default_value_t = 8)]
    pub points_per_decade: usize,

    /// Bootstrap resamples per estimate; 0 disables margins.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Domains with fewer eligible documents are left out of the analysis.
    #[arg(long, default_value_t = 1000)]
    pub min_domain_docs: usize,

    #[arg(long, default_value_t = 20)]
    pub pacf_lags: usize,

    #[arg(long, value_enum, default_value_t = RsAdjustment::BlockMean)]
    pub rs_adjustment: RsAdjustment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RsAdjustment {
    BlockMean,
    LiteralPrefix,
}

impl From<RsAdjustment> for MeanAdjustment {
    fn from(a: RsAdjustment) -> Self {
        match a {
            RsAdjustment::BlockMean => MeanAdjustment::BlockMean,
            RsAdjustment::LiteralPrefix => MeanAdjustment::LiteralPrefix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Fgn,
    #[value(name = "white_noise", alias = "white-noise")]
    WhiteNoise,
    Ar1,
}

impl From<Kind> for SynthKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Fgn => SynthKind::Fgn,
            Kind::WhiteNoise => SynthKind::WhiteNoise,
            Kind::Ar1 => SynthKind::Ar1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthFormat {
    /// One CSV per path (`x` header, one value per line).
    Csv,
    /// A single corpus file; values become log-probabilities.
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,

    #[arg(long, default_value_t = 0.7)]
    pub hurst: f64,

    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,

    #[arg(long, default_value_t = 1)]
    pub count: usize,

    #[arg(long, default_value_t = 65536)]
    pub length: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory for CSV output, file path for JSONL output.
    #[arg(long)]
    pub output: PathBuf,

    #[arg(long, value_enum, default_value_t = SynthFormat::Csv)]
    pub format: SynthFormat,

    /// Domain label written into JSONL documents.
    #[arg(long, default_value = "synthetic")]
    pub domain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Adds a fixed bias to every rescaled-range estimate.
    RsBias,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Also write the table as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub tau_min: usize,

    #[arg(long, default_value_t = 512)]
    pub tau_max: usize,

    #[arg(long, default_value_t = 32)]
    pub rs_min: usize,

    #[arg(long, default_value_t = 4096)]
    pub rs_max: usize,

    #[arg(long, default_value_t = 8)]
    pub points_per_decade: usize,

    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Predictor {
    Bpb,
    Hurst,
    Hb,
}

impl Predictor {
    pub fn name(self) -> &'static str {
        match self {
            Predictor::Bpb => "bpb",
            Predictor::Hurst => "hurst",
            Predictor::Hb => "hb",
        }
    }

    /// Column name in the bundled reference table.
    pub fn reference_column(self) -> &'static str {
        match self {
            Predictor::Bpb => "bpb",
            Predictor::Hurst => "h",
            Predictor::Hb => "hb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BpbChoice {
    Validation,
    DomainMedianNll,
}

impl From<BpbChoice> for BpbSource {
    fn from(b: BpbChoice) -> Self {
        match b {
            BpbChoice::Validation => BpbSource::Validation,
            BpbChoice::DomainMedianNll => BpbSource::DomainMedianNll,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Model table CSV (`model,bpb,median_h,<metric>...`); bundled data if omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Target metric column; repeat for several. Default: all.
    #[arg(long)]
    pub metric: Vec<String>,

    /// Predictor; repeat for several. Default: all.
    #[arg(long, value_enum)]
    pub predictor: Vec<Predictor>,

    /// BPB aggregate for the bundled table.
    #[arg(long, value_enum, default_value_t = BpbChoice::Validation)]
    pub bpb_source: BpbChoice,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// JSONL with `doc_id`, `domain` and `text` per line.
    #[arg(long)]
    pub input: PathBuf,

    /// Corpus JSONL to write.
    #[arg(long)]
    pub output: PathBuf,

    #[arg(long, env = "FRACTAL_SCORER_URL")]
    pub endpoint: String,

    #[arg(long)]
    pub model: String,

    /// Keep at most this many scored tokens per document.
    #[arg(long, default_value_t = 8192)]
    pub token_cap: usize,

    /// Requests per second across all workers.
    #[arg(long)]
    pub rps: Option<f64>,

    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,

    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
}
