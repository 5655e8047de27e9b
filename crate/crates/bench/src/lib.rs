//! Shared inputs for the benchmarks.

use fractal_core::synth::generate_paths;
use fractal_core::{normalize, IncrementProcess, IntegralProcess, SynthSpec};

/// `count` fGn paths as normalized increments and their running sums.
pub fn fgn_docs(
    hurst: f64,
    count: usize,
    length: usize,
) -> (Vec<IncrementProcess>, Vec<IntegralProcess>) {
    let raw = generate_paths(&SynthSpec::fgn(hurst, length, 1), count).expect("valid spec");
    let inc: Vec<_> = raw
        .iter()
        .map(|x| normalize(x).expect("non-constant"))
        .collect();
    let int = raw
        .iter()
        .map(|x| IntegralProcess::from_increments(x).expect("finite"))
        .collect();
    (inc, int)
}
