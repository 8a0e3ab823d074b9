//! Checks shared by the integration tests and the acceptance run. Each one
//! returns a verdict so the acceptance target can print it as a line.
#![allow(dead_code)]

pub mod gradients;
pub mod sampling;
pub mod simulator;

use std::fmt;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    /// Combines several verdicts; passes only if all do.
    pub fn all(parts: impl IntoIterator<Item = Verdict>) -> Self {
        let parts: Vec<Verdict> = parts.into_iter().collect();
        let passed = parts.iter().all(|v| v.passed);
        let detail = parts.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join("; ");
        Self { passed, detail }
    }

    pub fn assert(&self) {
        println!("{self}");
        assert!(self.passed, "{}", self.detail);
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

/// Pearson statistic of `counts` against a uniform expectation.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Whether a chi-square statistic with `df` degrees of freedom lies within
/// three standard deviations of its mean.
pub fn chi_square_within_3_sigma(stat: f64, df: usize) -> bool {
    let df = df as f64;
    (stat - df).abs() <= 3.0 * (2.0 * df).sqrt()
}
