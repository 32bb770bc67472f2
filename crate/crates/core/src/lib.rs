//! Resampling-conformal anomaly detection.
//!
//! One-class scorers ([`detectors`]) are calibrated by split, leave-one-out,
//! K-fold or bootstrap resampling ([`conformal`]) into detectors that emit
//! marginally valid conformal p-values. Batches of p-values are corrected with
//! the Benjamini-Hochberg step-up procedure ([`multiplicity`]) to control the
//! false discovery rate. [`bench`] holds the replicate-based evaluation
//! harness used to measure FDR and power.
//!
//! Conformity scores follow one convention everywhere: larger means more
//! normal, smaller means more anomalous.

pub mod bench;
pub mod conformal;
pub mod detectors;
mod error;
pub mod matrix;
pub mod multiplicity;
pub mod resample;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
pub use seed::RngSeed;
