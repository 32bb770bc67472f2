//! Index plans for split, leave-one-out, K-fold and bootstrap resampling.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngSeed};

/// What kind of plan to build and its size parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanSpec {
    /// One random train/calibration split with `calib_size` calibration rows.
    Split { calib_size: usize },
    LeaveOneOut,
    KFold { folds: usize },
    /// `draws` bootstrap samples of `ceil(ratio * n)` rows each, with replacement.
    Bootstrap { draws: usize, ratio: f64 },
}

/// One fit/holdout round of a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    /// Rows the model is fitted on. Bootstrap rounds may repeat rows.
    pub fit: Vec<usize>,
    /// Rows scored by that model to produce calibration scores.
    pub holdout: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapDraw {
    /// Sampled row indices in draw order (with repeats).
    pub sample: Vec<usize>,
    /// Sorted indices that never appear in `sample`.
    pub out_of_bag: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResamplePlan {
    Split { train: Vec<usize>, calibration: Vec<usize> },
    LeaveOneOut { n: usize },
    /// Folds are sorted internally and ordered by their smallest index.
    KFold { n: usize, folds: Vec<Vec<usize>> },
    Bootstrap { n: usize, draws: Vec<BootstrapDraw> },
}

impl ResamplePlan {
    pub fn n_rounds(&self) -> usize {
        match self {
            ResamplePlan::Split { .. } => 1,
            ResamplePlan::LeaveOneOut { n } => *n,
            ResamplePlan::KFold { folds, .. } => folds.len(),
            ResamplePlan::Bootstrap { draws, .. } => draws.len(),
        }
    }

    /// The `k`-th fit/holdout round.
    pub fn round(&self, k: usize) -> Round {
        match self {
            ResamplePlan::Split { train, calibration } => {
                assert_eq!(k, 0, "split plans have a single round");
                Round {
                    fit: train.clone(),
                    holdout: calibration.clone(),
                }
            }
            ResamplePlan::LeaveOneOut { n } => Round {
                fit: (0..*n).filter(|&i| i != k).collect(),
                holdout: vec![k],
            },
            ResamplePlan::KFold { n, folds } => Round {
                fit: complement(*n, &folds[k]),
                holdout: folds[k].clone(),
            },
            ResamplePlan::Bootstrap { draws, .. } => Round {
                fit: draws[k].sample.clone(),
                holdout: draws[k].out_of_bag.clone(),
            },
        }
    }

    pub fn rounds(&self) -> impl Iterator<Item = Round> + '_ {
        (0..self.n_rounds()).map(|k| self.round(k))
    }

    /// Total number of held-out rows over all rounds.
    pub fn holdout_total(&self) -> usize {
        match self {
            ResamplePlan::Split { calibration, .. } => calibration.len(),
            ResamplePlan::LeaveOneOut { n } | ResamplePlan::KFold { n, .. } => *n,
            ResamplePlan::Bootstrap { draws, .. } => {
                draws.iter().map(|d| d.out_of_bag.len()).sum()
            }
        }
    }
}

/// Rows per bootstrap draw for `n` rows at `ratio`.
pub fn bootstrap_draw_size(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).ceil() as usize
}

/// Expected out-of-bag count of one bootstrap draw: `n (1 - 1/n)^m`.
pub fn expected_oob_size(n: usize, ratio: f64) -> f64 {
    let m = bootstrap_draw_size(n, ratio) as f64;
    let n = n as f64;
    n * (1.0 - 1.0 / n).powf(m)
}

pub fn make_plan(n: usize, spec: PlanSpec, seed: RngSeed) -> Result<ResamplePlan> {
    if n < 2 {
        return Err(Error::invalid(format!("resampling needs at least 2 rows, got {n}")));
    }
    let mut rng = seed.rng();
    match spec {
        PlanSpec::Split { calib_size } => {
            if calib_size == 0 || calib_size >= n {
                return Err(Error::invalid(format!(
                    "split of {n} rows into {calib_size} calibration rows leaves an empty part"
                )));
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut calibration = idx.split_off(n - calib_size);
            idx.sort_unstable();
            calibration.sort_unstable();
            Ok(ResamplePlan::Split {
                train: idx,
                calibration,
            })
        }
        PlanSpec::LeaveOneOut => Ok(ResamplePlan::LeaveOneOut { n }),
        PlanSpec::KFold { folds: k } => {
            if k < 2 || k > n {
                return Err(Error::invalid(format!(
                    "K-fold needs 2 <= K <= n, got K={k} for n={n}"
                )));
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut folds = vec![Vec::with_capacity(n / k + 1); k];
            for (pos, i) in idx.into_iter().enumerate() {
                folds[pos % k].push(i);
            }
            for f in &mut folds {
                f.sort_unstable();
            }
            folds.sort_unstable_by_key(|f| f[0]);
            Ok(ResamplePlan::KFold { n, folds })
        }
        PlanSpec::Bootstrap { draws, ratio } => {
            if draws == 0 {
                return Err(Error::invalid("bootstrap needs at least one draw"));
            }
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::invalid(format!(
                    "bootstrap ratio must lie in (0, 1], got {ratio}"
                )));
            }
            let m = bootstrap_draw_size(n, ratio);
            if m >= n {
                return Err(Error::invalid(format!(
                    "bootstrap ratio {ratio} draws {m} of {n} rows and can leave no out-of-bag rows for calibration"
                )));
            }
            let draws = (0..draws)
                .map(|_| {
                    let sample: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
                    let mut seen = vec![false; n];
                    for &i in &sample {
                        seen[i] = true;
                    }
                    let out_of_bag = (0..n).filter(|&i| !seen[i]).collect();
                    BootstrapDraw { sample, out_of_bag }
                })
                .collect();
            Ok(ResamplePlan::Bootstrap { n, draws })
        }
    }
}

/// Random disjoint split of `0..n` with `round(train_frac * n)` training rows.
pub fn random_partition(
    n: usize,
    train_frac: f64,
    seed: RngSeed,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let n_train = (train_frac * n as f64).round() as usize;
    if n < 2 || n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "partition of {n} rows at fraction {train_frac} leaves an empty part"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed.rng());
    let mut holdout = idx.split_off(n_train);
    idx.sort_unstable();
    holdout.sort_unstable();
    Ok((idx, holdout))
}

fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kfold_with_k_equal_n_is_singletons() {
        let plan = make_plan(4, PlanSpec::KFold { folds: 4 }, RngSeed(3)).unwrap();
        let ResamplePlan::KFold { folds, .. } = &plan else { panic!() };
        assert_eq!(folds, &vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn kfold_sizes_are_balanced() {
        let plan = make_plan(10, PlanSpec::KFold { folds: 3 }, RngSeed(11)).unwrap();
        let ResamplePlan::KFold { folds, .. } = &plan else { panic!() };
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_rejects_too_many_folds() {
        assert!(make_plan(5, PlanSpec::KFold { folds: 6 }, RngSeed(0)).is_err());
        assert!(make_plan(5, PlanSpec::KFold { folds: 1 }, RngSeed(0)).is_err());
    }

    #[test]
    fn bootstrap_rejects_full_ratio() {
        assert!(make_plan(10, PlanSpec::Bootstrap { draws: 2, ratio: 1.0 }, RngSeed(0)).is_err());
        assert!(make_plan(10, PlanSpec::Bootstrap { draws: 2, ratio: 0.95 }, RngSeed(0)).is_err());
        assert!(make_plan(10, PlanSpec::Bootstrap { draws: 0, ratio: 0.5 }, RngSeed(0)).is_err());
        assert!(make_plan(100, PlanSpec::Bootstrap { draws: 2, ratio: 0.95 }, RngSeed(0)).is_ok());
    }

    #[test]
    fn bootstrap_oob_size_matches_expectation() {
        // Analytic expectation n (1 - 1/n)^m for n = 100, m = 95.
        let analytic = 100.0 * (0.99f64).powi(95);
        assert!((expected_oob_size(100, 0.95) - analytic).abs() < 1e-12);
        let mut total = 0usize;
        let seeds = 1000;
        for s in 0..seeds {
            let plan = make_plan(100, PlanSpec::Bootstrap { draws: 5, ratio: 0.95 }, RngSeed(s)).unwrap();
            let ResamplePlan::Bootstrap { draws, .. } = &plan else { panic!() };
            assert!(draws.iter().all(|d| d.sample.len() == 95));
            total += plan.holdout_total();
        }
        let mean = total as f64 / (seeds as f64 * 5.0);
        assert!((mean - 38.6).abs() <= 2.0, "mean oob {mean}");
        assert!((mean - analytic).abs() <= 0.5, "mean oob {mean} vs {analytic}");
    }

    #[test]
    fn split_sizes() {
        let plan = make_plan(10, PlanSpec::Split { calib_size: 4 }, RngSeed(2)).unwrap();
        let ResamplePlan::Split { train, calibration } = &plan else { panic!() };
        assert_eq!(train.len(), 6);
        assert_eq!(calibration.len(), 4);
        assert!(make_plan(10, PlanSpec::Split { calib_size: 10 }, RngSeed(2)).is_err());
        assert!(make_plan(10, PlanSpec::Split { calib_size: 0 }, RngSeed(2)).is_err());
    }

    #[test]
    fn leave_one_out_rounds() {
        let plan = make_plan(3, PlanSpec::LeaveOneOut, RngSeed(0)).unwrap();
        let r: Vec<Round> = plan.rounds().collect();
        assert_eq!(r.len(), 3);
        assert_eq!(r[1].fit, vec![0, 2]);
        assert_eq!(r[1].holdout, vec![1]);
        assert!(make_plan(1, PlanSpec::LeaveOneOut, RngSeed(0)).is_err());
    }

    #[test]
    fn partition_examples() {
        let (a, b) = random_partition(10, 0.5, RngSeed(9)).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut all = [a.clone(), b.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(random_partition(10, 0.5, RngSeed(9)).unwrap(), (a, b));

        let (a, b) = random_partition(3, 0.34, RngSeed(1)).unwrap();
        assert_eq!((a.len(), b.len()), (1, 2));

        assert!(random_partition(3, 0.1, RngSeed(1)).is_err());
        assert!(random_partition(3, 0.9, RngSeed(1)).is_err());
        assert!(random_partition(3, 0.0, RngSeed(1)).is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = (usize, PlanSpec)> {
        (2usize..60).prop_flat_map(|n| {
            prop_oneof![
                (1..n).prop_map(|c| PlanSpec::Split { calib_size: c }),
                Just(PlanSpec::LeaveOneOut),
                (2..=n).prop_map(|k| PlanSpec::KFold { folds: k }),
                (1usize..6, 0.05f64..0.9).prop_map(|(d, r)| PlanSpec::Bootstrap { draws: d, ratio: r }),
            ]
            .prop_map(move |s| (n, s))
        })
    }

    proptest! {
        #[test]
        fn plans_satisfy_invariants((n, spec) in spec_strategy(), seed in any::<u64>()) {
            let plan = match make_plan(n, spec, RngSeed(seed)) {
                Ok(p) => p,
                // Small n with a large ratio can still hit ceil(r n) >= n.
                Err(_) => {
                    let is_full_bootstrap = matches!(spec,
                        PlanSpec::Bootstrap { ratio, .. } if bootstrap_draw_size(n, ratio) >= n);
                    prop_assert!(is_full_bootstrap);
                    return Ok(());
                }
            };
            prop_assert_eq!(&plan, &make_plan(n, spec, RngSeed(seed)).unwrap());
            match &plan {
                ResamplePlan::KFold { folds, .. } => {
                    let mut all = folds.concat();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                    let max = folds.iter().map(Vec::len).max().unwrap();
                    let min = folds.iter().map(Vec::len).min().unwrap();
                    prop_assert!(min >= 1 && max - min <= 1);
                }
                ResamplePlan::Bootstrap { draws, .. } => {
                    for d in draws {
                        prop_assert!(!d.out_of_bag.is_empty());
                        for i in 0..n {
                            let in_sample = d.sample.contains(&i);
                            let in_oob = d.out_of_bag.binary_search(&i).is_ok();
                            prop_assert!(in_sample ^ in_oob);
                        }
                    }
                }
                ResamplePlan::Split { train, calibration } => {
                    prop_assert!(!train.is_empty() && !calibration.is_empty());
                    prop_assert!(train.iter().all(|i| calibration.binary_search(i).is_err()));
                    prop_assert_eq!(train.len() + calibration.len(), n);
                }
                ResamplePlan::LeaveOneOut { .. } => {}
            }
            for r in plan.rounds() {
                prop_assert!(!r.fit.is_empty() && !r.holdout.is_empty());
            }
        }
    }
}
