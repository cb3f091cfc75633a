//! Experiment harnesses built on the network engine.

pub mod mnist;
pub mod single_pattern;

use serde::Serialize;

/// Outcome of presenting one pattern to a frozen network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternResult {
    pub true_label: usize,
    /// `None` when the maximum output rate is shared (including all-silent outputs).
    pub predicted: Option<usize>,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub seed: u64,
    pub patterns: Vec<PatternResult>,
    pub error_rate: f64,
}

impl ClassificationReport {
    pub fn new(seed: u64, patterns: Vec<PatternResult>) -> Self {
        let error_rate = error_rate(&patterns);
        ClassificationReport {
            seed,
            patterns,
            error_rate,
        }
    }
}

/// Fraction of patterns whose prediction is missing or wrong.
pub fn error_rate(patterns: &[PatternResult]) -> f64 {
    if patterns.is_empty() {
        return 0.0;
    }
    let wrong = patterns
        .iter()
        .filter(|p| p.predicted != Some(p.true_label))
        .count();
    wrong as f64 / patterns.len() as f64
}

/// Index of the unique maximum, if there is one.
pub fn argmax_unique(xs: &[f64]) -> Option<usize> {
    let (mut best, mut tied) = (0, false);
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
            tied = false;
        } else if xs[i] == xs[best] {
            tied = true;
        }
    }
    (!xs.is_empty() && !tied).then_some(best)
}
