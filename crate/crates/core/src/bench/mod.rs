//! Replicate-based evaluation of conformal detectors: marginal FDR and power
//! under Benjamini-Hochberg control, plus the calibration-size sweep for
//! bootstrap strategies.

mod dataset;
mod experiment;
mod report;

pub use dataset::{load_csv, make_synthetic, write_csv, LabeledDataset};
pub use experiment::{
    draws_for_target, run_calibration_sweep, run_calibration_sweep_with, run_experiment,
    run_experiment_with, ExperimentConfig, LOO_POOL_LIMIT,
};
pub use report::{percentile_nearest_rank, render_table, ExperimentReport, ReplicateResult, Summary};
