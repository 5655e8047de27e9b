use thiserror::Error;

/// Errors produced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum FractalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid window: tau = {tau} must be in 1..{len}")]
    InvalidWindow { tau: usize, len: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("circulant embedding failed: eigenvalue {eigenvalue:e} at index {index}")]
    EmbeddingFailure { index: usize, eigenvalue: f64 },

    #[error("bootstrap unstable: estimator failed on {failures} of {resamples} resamples")]
    BootstrapInstability { failures: usize, resamples: usize },

    #[error("corpus format error in {path}: {malformed} of {total} lines malformed")]
    CorpusFormat {
        path: String,
        malformed: usize,
        total: usize,
    },

    #[error("scoring request failed with status {status}: {body}")]
    Scoring { status: u16, body: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FractalError>;
