//! Benjamini-Hochberg step-up procedure and batch metrics.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhResult {
    pub adjusted: Vec<f64>,
    pub rejected: Vec<bool>,
    pub alpha: f64,
}

impl BhResult {
    pub fn m(&self) -> usize {
        self.adjusted.len()
    }

    pub fn n_rejected(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }
}

fn check_p_values(p: &[f64]) -> Result<()> {
    match p.iter().position(|&v| !(v > 0.0 && v <= 1.0)) {
        Some(i) => Err(Error::invalid(format!(
            "p-value {} at position {i} is outside (0, 1]",
            p[i]
        ))),
        None => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Positions of `p` in ascending order (stable for ties).
fn ascending(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    order
}

/// BH-adjusted p-values `min(1, min_{j >= i} m p_(j) / j)`, in input order.
pub fn bh_adjust(pvalues: &[f64]) -> Result<Vec<f64>> {
    check_p_values(pvalues)?;
    let m = pvalues.len();
    let order = ascending(pvalues);
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(m as f64 * pvalues[i] / (rank + 1) as f64);
        // m p / m can round just below p.
        adjusted[i] = running.max(pvalues[i]);
    }
    // Tied raw values share one adjusted value: for a tie, m p / i is
    // largest at the smallest rank, so the suffix minimum is already equal.
    Ok(adjusted)
}

/// Rejects the `k` smallest p-values for the largest `k` with
/// `p_(k) <= k alpha / m`, or none when no such `k` exists.
pub fn bh_reject(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>> {
    check_p_values(pvalues)?;
    check_alpha(alpha)?;
    let m = pvalues.len();
    let order = ascending(pvalues);
    // p_(k) <= k alpha / m, evaluated in the same form as `bh_adjust` so the
    // two always agree.
    let k = (1..=m)
        .rev()
        .find(|&k| m as f64 * pvalues[order[k - 1]] / k as f64 <= alpha)
        .unwrap_or(0);
    let mut rejected = vec![false; m];
    for &i in &order[..k] {
        rejected[i] = true;
    }
    Ok(rejected)
}

pub fn benjamini_hochberg(pvalues: &[f64], alpha: f64) -> Result<BhResult> {
    Ok(BhResult {
        adjusted: bh_adjust(pvalues)?,
        rejected: bh_reject(pvalues, alpha)?,
        alpha,
    })
}

fn check_lengths(rejected: &[bool], is_outlier: &[bool]) -> Result<()> {
    if rejected.len() != is_outlier.len() {
        return Err(Error::invalid(format!(
            "{} decisions but {} labels",
            rejected.len(),
            is_outlier.len()
        )));
    }
    Ok(())
}

/// False discovery proportion `V / R`, with 0 when nothing is rejected.
pub fn fdp(rejected: &[bool], is_outlier: &[bool]) -> Result<f64> {
    check_lengths(rejected, is_outlier)?;
    let (mut v, mut r) = (0usize, 0usize);
    for (&rej, &out) in rejected.iter().zip(is_outlier) {
        if rej {
            r += 1;
            if !out {
                v += 1;
            }
        }
    }
    Ok(if r == 0 { 0.0 } else { v as f64 / r as f64 })
}

/// Fraction of true outliers that were rejected.
pub fn power(rejected: &[bool], is_outlier: &[bool]) -> Result<f64> {
    check_lengths(rejected, is_outlier)?;
    let outliers = is_outlier.iter().filter(|&&o| o).count();
    if outliers == 0 {
        return Err(Error::invalid("power is undefined without outliers"));
    }
    let hits = rejected
        .iter()
        .zip(is_outlier)
        .filter(|&(&r, &o)| r && o)
        .count();
    Ok(hits as f64 / outliers as f64)
}
