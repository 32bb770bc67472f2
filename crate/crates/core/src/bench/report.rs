use std::fmt::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;

/// Conditional FDR and power of one training replicate, averaged over its
/// test sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub cfdr: f64,
    pub cpower: f64,
    pub n_cal: usize,
}

/// Mean, nearest-rank 90th percentile and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub p90: f64,
    pub std: f64,
}

impl Summary {
    /// Panics on an empty slice.
    pub fn of(values: &[f64]) -> Summary {
        assert!(!values.is_empty(), "summary of no values");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            p90: percentile_nearest_rank(values, 0.9),
            std,
        }
    }

    /// Monte Carlo standard error of the mean.
    pub fn std_error(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

/// Smallest value with at least `q * n` values at or below it.
pub fn percentile_nearest_rank(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: String,
    pub config: ExperimentConfig,
    /// Rows in each replicate's training pool.
    pub n_train: usize,
    pub n_test: usize,
    pub n_test_outliers: usize,
    pub mean_n_cal: f64,
    pub replicates: Vec<ReplicateResult>,
    /// Summary of per-replicate cFDR; `fdr.mean` is the marginal FDR.
    pub fdr: Summary,
    pub power: Summary,
    /// Wall-clock time, kept out of the JSON so reports stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn mfdr(&self) -> f64 {
        self.fdr.mean
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Aligned text table: one row per report with mean, P90 and sigma for FDR
/// and power.
pub fn render_table(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    let name_w = reports
        .iter()
        .map(|r| r.method.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let data_w = reports.iter().map(|r| r.dataset.len()).chain([7]).max().unwrap_or(7);
    let _ = writeln!(
        out,
        // `x̄` carries a combining mark, so those cells get one extra char.
        "{:<data_w$}  {:<name_w$}  {:<8}  {:>7}  | {:>7} {:>6} {:>6} | {:>7} {:>6} {:>6}",
        "dataset", "method", "detector", "n_cal", "FDR x̄", "P90", "σ", "Pow x̄", "P90", "σ"
    );
    let _ = writeln!(out, "{}", "-".repeat(data_w + name_w + 74));
    for r in reports {
        let _ = writeln!(
            out,
            "{:<data_w$}  {:<name_w$}  {:<8}  {:>7.1}  | {:>6.3} {:>6.3} {:>6.3} | {:>6.3} {:>6.3} {:>6.3}",
            r.dataset,
            r.method,
            r.config.detector.algorithm.to_string(),
            r.mean_n_cal,
            r.fdr.mean,
            r.fdr.p90,
            r.fdr.std,
            r.power.mean,
            r.power.p90,
            r.power.std,
        );
    }
    out
}
