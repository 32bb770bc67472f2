use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, ReplicateResult, Summary};
use super::LabeledDataset;
use crate::conformal::{calibrate, Method, Strategy};
use crate::detectors::{DetectorConfig, OneClassAlgorithm};
use crate::multiplicity::{bh_reject, fdp, power};
use crate::resample::{expected_oob_size, random_partition};
use crate::{Error, Result, RngSeed};

/// Training pools above this size refuse leave-one-out strategies unless
/// `allow_large_loo` is set.
pub const LOO_POOL_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Training replicates `J`.
    pub replicates: usize,
    /// Test sets per replicate `L`.
    pub test_sets: usize,
    pub alpha: f64,
    pub detector: DetectorConfig,
    pub strategy: Strategy,
    /// Fraction of the inliers drawn into each training pool.
    pub train_frac: f64,
    /// Upper bound on the split calibration set.
    pub cal_cap: usize,
    /// Test set size is `min(test_cap, n_train / 3)`.
    pub test_cap: usize,
    pub outlier_frac_test: f64,
    pub seed: RngSeed,
    pub allow_large_loo: bool,
}

impl ExperimentConfig {
    pub fn new(detector: DetectorConfig, strategy: Strategy) -> Self {
        ExperimentConfig {
            replicates: 20,
            test_sets: 20,
            alpha: 0.2,
            detector,
            strategy,
            train_frac: 0.5,
            cal_cap: 2000,
            test_cap: 1000,
            outlier_frac_test: 0.1,
            seed: RngSeed(0),
            allow_large_loo: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.test_sets == 0 {
            return Err(Error::invalid("need at least one replicate and one test set"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.outlier_frac_test > 0.0 && self.outlier_frac_test < 1.0) {
            return Err(Error::invalid(format!(
                "test outlier fraction must lie in (0, 1), got {}",
                self.outlier_frac_test
            )));
        }
        if self.cal_cap == 0 || self.test_cap == 0 {
            return Err(Error::invalid("calibration and test caps must be positive"));
        }
        self.strategy.validate()
    }

    /// The strategy with the calibration cap applied to split calibration.
    fn effective_strategy(&self) -> Strategy {
        let mut s = self.strategy;
        if let Method::Split { calib_fraction, .. } = s.method {
            s.method = Method::Split {
                calib_fraction,
                max_calib: Some(self.cal_cap),
            };
        }
        s
    }
}

struct Layout {
    n_train: usize,
    n_test: usize,
    n_test_outliers: usize,
}

fn layout(config: &ExperimentConfig, n_inliers: usize, n_outliers: usize) -> Result<Layout> {
    let n_train = (config.train_frac * n_inliers as f64).round() as usize;
    if n_train < 2 || n_train >= n_inliers {
        return Err(Error::invalid(format!(
            "{n_inliers} inliers cannot be split into a training pool at fraction {}",
            config.train_frac
        )));
    }
    if config.strategy.is_leave_one_out() && n_train > LOO_POOL_LIMIT && !config.allow_large_loo {
        return Err(Error::invalid(format!(
            "leave-one-out calibration on a {n_train}-row pool exceeds the low-data limit of {LOO_POOL_LIMIT} rows (override with --force-loo)"
        )));
    }
    let n_test = config.test_cap.min(n_train / 3);
    let n_test_outliers = (config.outlier_frac_test * n_test as f64).round() as usize;
    if n_test_outliers == 0 || n_test_outliers >= n_test {
        return Err(Error::invalid(format!(
            "test sets of {n_test} rows cannot hold {} outliers",
            config.outlier_frac_test
        )));
    }
    if n_outliers == 0 {
        return Err(Error::invalid("dataset has no outliers to test against"));
    }
    let holdout = n_inliers - n_train;
    if holdout < n_test - n_test_outliers {
        return Err(Error::invalid(format!(
            "{holdout} held-out inliers cannot fill test sets of {} inliers",
            n_test - n_test_outliers
        )));
    }
    Ok(Layout {
        n_train,
        n_test,
        n_test_outliers,
    })
}

/// Runs the replicate protocol with the configured built-in detector.
pub fn run_experiment(config: &ExperimentConfig, data: &LabeledDataset) -> Result<ExperimentReport> {
    run_experiment_with(config, &config.detector, data)
}

/// Runs `J` replicates. Each draws an inlier-only training pool, calibrates
/// the strategy on it, and scores `L` test sets sampled from the held-out
/// inliers and the outliers. Test sets within a replicate may overlap.
pub fn run_experiment_with<A: OneClassAlgorithm>(
    config: &ExperimentConfig,
    algorithm: &A,
    data: &LabeledDataset,
) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let inliers = data.inlier_indices()?;
    let outliers = data.outlier_indices()?;
    let lay = layout(config, inliers.len(), outliers.len())?;
    let strategy = config.effective_strategy();

    let replicate = |j: usize| -> Result<ReplicateResult> {
        let seed = config.seed.derive(j as u64);
        let (pool_pos, holdout_pos) =
            random_partition(inliers.len(), config.train_frac, seed.stream(b"pool"))?;
        let pool: Vec<usize> = pool_pos.iter().map(|&p| inliers[p]).collect();
        let detector = calibrate(
            &strategy,
            algorithm,
            &data.features.select(&pool),
            seed.stream(b"calibrate"),
        )?;

        // p-values are per-point, so score every candidate once.
        let candidates: Vec<usize> = holdout_pos
            .iter()
            .map(|&p| inliers[p])
            .chain(outliers.iter().copied())
            .collect();
        let p_all = detector.p_values(&data.features.select(&candidates))?;
        let n_hold = holdout_pos.len();
        let n_in = lay.n_test - lay.n_test_outliers;

        let mut fdp_sum = 0.0;
        let mut power_sum = 0.0;
        let mut p = Vec::with_capacity(lay.n_test);
        let mut labels = Vec::with_capacity(lay.n_test);
        for l in 0..config.test_sets {
            let mut rng = seed.derive(l as u64).stream(b"test").rng();
            p.clear();
            labels.clear();
            for i in index::sample(&mut rng, n_hold, n_in) {
                p.push(p_all[i]);
                labels.push(false);
            }
            if outliers.len() >= lay.n_test_outliers {
                for i in index::sample(&mut rng, outliers.len(), lay.n_test_outliers) {
                    p.push(p_all[n_hold + i]);
                    labels.push(true);
                }
            } else {
                for _ in 0..lay.n_test_outliers {
                    p.push(p_all[n_hold + rng.random_range(0..outliers.len())]);
                    labels.push(true);
                }
            }
            let rejected = bh_reject(&p, config.alpha)?;
            fdp_sum += fdp(&rejected, &labels)?;
            power_sum += power(&rejected, &labels)?;
        }
        let l = config.test_sets as f64;
        Ok(ReplicateResult {
            cfdr: fdp_sum / l,
            cpower: power_sum / l,
            n_cal: detector.n_cal(),
        })
    };

    #[cfg(feature = "parallel")]
    let replicates: Vec<ReplicateResult> = {
        use rayon::prelude::*;
        (0..config.replicates).into_par_iter().map(replicate).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let replicates: Vec<ReplicateResult> =
        (0..config.replicates).map(replicate).collect::<Result<_>>()?;

    let cfdr: Vec<f64> = replicates.iter().map(|r| r.cfdr).collect();
    let cpower: Vec<f64> = replicates.iter().map(|r| r.cpower).collect();
    let mean_n_cal = replicates.iter().map(|r| r.n_cal as f64).sum::<f64>() / replicates.len() as f64;
    Ok(ExperimentReport {
        dataset: data.name.clone(),
        method: strategy.to_string(),
        config: *config,
        n_train: lay.n_train,
        n_test: lay.n_test,
        n_test_outliers: lay.n_test_outliers,
        mean_n_cal,
        fdr: Summary::of(&cfdr),
        power: Summary::of(&cpower),
        replicates,
        runtime: started.elapsed(),
    })
}

/// Bootstrap draws whose expected pooled out-of-bag count reaches `target`.
pub fn draws_for_target(n_train: usize, ratio: f64, target: usize) -> Result<usize> {
    if target == 0 {
        return Err(Error::invalid("calibration size target must be positive"));
    }
    let per_draw = expected_oob_size(n_train, ratio);
    if per_draw.is_nan() || per_draw < 1.0 {
        return Err(Error::invalid(format!(
            "a {n_train}-row pool at ratio {ratio} yields no out-of-bag rows"
        )));
    }
    Ok(((target as f64 / per_draw) - 1e-9).ceil().max(1.0) as usize)
}

/// One experiment per calibration size target for a bootstrap strategy.
pub fn run_calibration_sweep(
    config: &ExperimentConfig,
    data: &LabeledDataset,
    target_cal_sizes: &[usize],
) -> Result<Vec<ExperimentReport>> {
    run_calibration_sweep_with(config, &config.detector, data, target_cal_sizes)
}

/// For each target, picks the draw count from the expected out-of-bag yield
/// and subsamples the pooled out-of-bag scores to exactly the target.
pub fn run_calibration_sweep_with<A: OneClassAlgorithm>(
    config: &ExperimentConfig,
    algorithm: &A,
    data: &LabeledDataset,
    target_cal_sizes: &[usize],
) -> Result<Vec<ExperimentReport>> {
    let Method::Bootstrap { ratio, .. } = config.strategy.method else {
        return Err(Error::invalid(format!(
            "the calibration sweep requires jab or jab+, got {}",
            config.strategy.name()
        )));
    };
    config.validate()?;
    let n_inliers = data.inlier_indices()?.len();
    let n_train = (config.train_frac * n_inliers as f64).round() as usize;
    target_cal_sizes
        .iter()
        .map(|&target| {
            let draws = draws_for_target(n_train, ratio, target)?;
            let mut cfg = *config;
            cfg.strategy.method = Method::Bootstrap {
                draws,
                ratio,
                calib_size: Some(target),
            };
            run_experiment_with(&cfg, algorithm, data)
        })
        .collect()
}

