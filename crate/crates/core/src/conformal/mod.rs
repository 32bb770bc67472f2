//! Conformal p-values and the resampling calibration strategies.

mod calibrate;
mod persist;
mod strategy;

pub use calibrate::{calibrate, predict_p_values, CalibratedDetector, Inference};
pub use persist::{from_reader, load, save, to_writer, FORMAT_NAME, FORMAT_VERSION};
pub use strategy::{Aggregation, Method, Strategy};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sorted multiset of calibration conformity scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CalibrationScores(Vec<f64>);

impl CalibrationScores {
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyCalibration);
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("calibration scores must be finite"));
        }
        scores.sort_unstable_by(f64::total_cmp);
        Ok(CalibrationScores(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of calibration scores `<= score`.
    pub fn rank(&self, score: f64) -> usize {
        self.0.partition_point(|&s| s <= score)
    }

    /// `(1 + #{s <= score}) / (n + 1)`; ties count against the test point.
    pub fn p_value(&self, score: f64) -> f64 {
        (1 + self.rank(score)) as f64 / (self.0.len() + 1) as f64
    }
}

impl TryFrom<Vec<f64>> for CalibrationScores {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        CalibrationScores::new(v)
    }
}

impl From<CalibrationScores> for Vec<f64> {
    fn from(c: CalibrationScores) -> Self {
        c.0
    }
}

/// Conformal p-value of one test score against a calibration multiset.
pub fn smoothed_p_value(calib_scores: &[f64], test_score: f64) -> Result<f64> {
    if !test_score.is_finite() {
        return Err(Error::invalid("test score must be finite"));
    }
    Ok(CalibrationScores::new(calib_scores.to_vec())?.p_value(test_score))
}

/// Reduces the fold-model scores of one point to a single score.
pub fn aggregate(scores: &[f64], method: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty score list"));
    }
    Ok(match method {
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        Aggregation::Median => {
            let mut v = scores.to_vec();
            v.sort_unstable_by(f64::total_cmp);
            let mid = v.len() / 2;
            if v.len() % 2 == 1 {
                v[mid]
            } else {
                0.5 * (v[mid - 1] + v[mid])
            }
        }
    })
}
