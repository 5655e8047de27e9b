//! The `fractal` command line: corpus analysis, synthetic data, the estimator
//! validation battery, downstream-score regressions and remote scoring.

pub mod analyze;
pub mod args;
pub mod oracle;
pub mod predict;
pub mod report;
pub mod score;
pub mod synth;
pub mod validate;

use std::fmt;
use std::io::Write;

use fractal_core::FractalError;

pub use args::{Cli, Command};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const VALIDATION_FAILED: u8 = 1;
    pub const NO_DATA: u8 = 2;
    pub const ESTIMATOR: u8 = 3;
    pub const USAGE: u8 = 64;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::USAGE, message)
    }

    pub fn no_data(message: impl Into<String>) -> Self {
        Self::new(exit::NO_DATA, message)
    }

    /// Prefixes the message with some context.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FractalError> for CliError {
    fn from(e: FractalError) -> Self {
        let code = match &e {
            FractalError::InvalidInput(_) | FractalError::InvalidWindow { .. } => exit::USAGE,
            FractalError::CorpusFormat { .. }
            | FractalError::Io(_)
            | FractalError::Json(_)
            | FractalError::Csv(_)
            | FractalError::Scoring { .. }
            | FractalError::Protocol(_) => exit::NO_DATA,
            _ => exit::ESTIMATOR,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        FractalError::Io(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runs a parsed command, writing human-readable output to `out`.
/// Returns the exit code for runs that complete.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> CliResult<u8> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Analyze(a) => analyze::run(a, out),
        Command::Synth(a) => synth::run(a, out),
        Command::Validate(a) => validate::run(a, out),
        Command::Predict(a) => predict::run(a, out),
        Command::Score(a) => score::run(a, out),
    })
}
