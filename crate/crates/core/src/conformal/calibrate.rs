use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{aggregate, Aggregation, CalibrationScores, Method, Strategy};
use crate::detectors::{DetectorModel, OneClassAlgorithm, Scorer};
use crate::resample::{make_plan, PlanSpec, Round};
use crate::{Error, FeatureMatrix, Result, RngSeed};

/// The model(s) used to score test points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference<M> {
    /// One model: the proper-train model for split, otherwise a model refit
    /// on all data.
    Single(M),
    /// The retained fold models of a "+" variant.
    Ensemble(Vec<M>),
}

/// A detector together with its calibration scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedDetector<M = DetectorModel> {
    strategy: Strategy,
    dim: usize,
    calibration: CalibrationScores,
    inference: Inference<M>,
}

impl<M: Scorer> CalibratedDetector<M> {
    pub(crate) fn from_parts(
        strategy: Strategy,
        calibration: CalibrationScores,
        inference: Inference<M>,
    ) -> Result<Self> {
        let dims: Vec<usize> = match &inference {
            Inference::Single(m) => vec![m.dim()],
            Inference::Ensemble(ms) => ms.iter().map(Scorer::dim).collect(),
        };
        let Some(&dim) = dims.first() else {
            return Err(Error::invalid("detector has no fold models"));
        };
        if dims.iter().any(|&d| d != dim) {
            return Err(Error::invalid("fold models disagree on feature dimension"));
        }
        if strategy.plus != matches!(inference, Inference::Ensemble(_)) {
            return Err(Error::invalid(format!(
                "strategy {} does not match the stored inference models",
                strategy.name()
            )));
        }
        Ok(CalibratedDetector {
            strategy,
            dim,
            calibration,
            inference,
        })
    }

    pub(crate) fn into_parts(self) -> (Strategy, CalibrationScores, Inference<M>) {
        (self.strategy, self.calibration, self.inference)
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Calibration set size; the smallest attainable p-value is `1 / (n_cal + 1)`.
    pub fn n_cal(&self) -> usize {
        self.calibration.len()
    }

    /// Calibration scores in ascending order.
    pub fn calibration_scores(&self) -> &[f64] {
        self.calibration.as_slice()
    }

    pub fn inference(&self) -> &Inference<M> {
        &self.inference
    }

    /// Test conformity scores: the single model's score, or the aggregate of
    /// all retained fold-model scores.
    pub fn test_scores(&self, batch: &FeatureMatrix) -> Result<Vec<f64>> {
        batch.check_dim(self.dim)?;
        match &self.inference {
            Inference::Single(m) => m.score(batch),
            Inference::Ensemble(models) => {
                let per_model: Vec<Vec<f64>> =
                    models.iter().map(|m| m.score(batch)).collect::<Result<_>>()?;
                let mut buf = vec![0.0; models.len()];
                (0..batch.n_rows())
                    .map(|i| {
                        for (b, s) in buf.iter_mut().zip(&per_model) {
                            *b = s[i];
                        }
                        aggregate(&buf, self.strategy.aggregation)
                    })
                    .collect()
            }
        }
    }

    /// Marginal conformal p-values, one per batch row.
    pub fn p_values(&self, batch: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self
            .test_scores(batch)?
            .into_iter()
            .map(|s| self.calibration.p_value(s))
            .collect())
    }
}

pub fn predict_p_values<M: Scorer>(det: &CalibratedDetector<M>, batch: &FeatureMatrix) -> Result<Vec<f64>> {
    det.p_values(batch)
}

/// Fits and calibrates `algorithm` on inlier data under `strategy`.
///
/// Fold `k` is fitted with seed `seed.derive(k)`. The refit model of the
/// non-"+" resampling variants uses a separate stream. K-fold folds are
/// ordered by their smallest row, so K = n folds reproduce leave-one-out
/// exactly.
pub fn calibrate<A: OneClassAlgorithm>(
    strategy: &Strategy,
    algorithm: &A,
    train: &FeatureMatrix,
    seed: RngSeed,
) -> Result<CalibratedDetector<A::Model>> {
    strategy.validate()?;
    let n = train.n_rows();
    let spec = match strategy.method {
        Method::Split {
            calib_fraction,
            max_calib,
        } => {
            let mut calib = (calib_fraction * n as f64).floor() as usize;
            if let Some(cap) = max_calib {
                calib = calib.min(cap);
            }
            PlanSpec::Split { calib_size: calib }
        }
        Method::Jackknife => PlanSpec::LeaveOneOut,
        Method::CrossValidation { folds } => PlanSpec::KFold { folds },
        Method::Bootstrap { draws, ratio, .. } => PlanSpec::Bootstrap { draws, ratio },
    };
    let plan = make_plan(n, spec, seed.stream(b"plan"))?;
    let keep_models = strategy.plus || matches!(strategy.method, Method::Split { .. });

    let fit_round = |k: usize| -> Result<(Vec<f64>, Option<A::Model>)> {
        let Round { fit, holdout } = plan.round(k);
        let model = algorithm.fit(&train.select(&fit), seed.derive(k as u64))?;
        let scores = model.score(&train.select(&holdout))?;
        Ok((scores, keep_models.then_some(model)))
    };

    #[cfg(feature = "parallel")]
    let rounds: Vec<_> = {
        use rayon::prelude::*;
        (0..plan.n_rounds()).into_par_iter().map(fit_round).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rounds: Vec<_> = (0..plan.n_rounds()).map(fit_round).collect::<Result<_>>()?;

    let mut scores = Vec::with_capacity(plan.holdout_total());
    let mut models = Vec::new();
    for (s, m) in rounds {
        scores.extend(s);
        models.extend(m);
    }

    if let Method::Bootstrap {
        calib_size: Some(target),
        ..
    } = strategy.method
    {
        if scores.len() > target {
            let mut rng = seed.stream(b"calibration-subsample").rng();
            let mut keep = index::sample(&mut rng, scores.len(), target).into_vec();
            keep.sort_unstable();
            scores = keep.into_iter().map(|i| scores[i]).collect();
        }
    }

    let inference = if strategy.plus {
        Inference::Ensemble(models)
    } else if let Method::Split { .. } = strategy.method {
        Inference::Single(models.pop().expect("split plan has one round"))
    } else {
        Inference::Single(algorithm.fit(train, seed.stream(b"final"))?)
    };

    CalibratedDetector::from_parts(*strategy, CalibrationScores::new(scores)?, inference)
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Median => "median",
            Aggregation::Mean => "mean",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{Algorithm, DetectorConfig};
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = RngSeed(seed).rng();
        let v: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        FeatureMatrix::new(n, d, v).unwrap()
    }

    /// Scores every point by minus its distance to a fixed centre; ignores the
    /// training data, so all fold models agree.
    struct Centre(Vec<f64>);

    impl Scorer for Centre {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn score_row(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }
    }

    struct CentreAlgo;

    impl OneClassAlgorithm for CentreAlgo {
        type Model = Centre;
        fn fit(&self, train: &FeatureMatrix, _: RngSeed) -> Result<Centre> {
            Ok(Centre(vec![0.0; train.n_cols()]))
        }
    }

    fn iforest() -> DetectorConfig {
        let mut c = DetectorConfig::new(Algorithm::IsolationForest);
        c.if_trees = 25;
        c
    }

    #[test]
    fn jackknife_structure() {
        let data = gaussian(5, 2, 1);
        let det = calibrate(&Strategy::jackknife(false), &iforest(), &data, RngSeed(3)).unwrap();
        assert_eq!(det.n_cal(), 5);
        assert!(matches!(det.inference(), Inference::Single(_)));
        let det = calibrate(&Strategy::jackknife(true), &iforest(), &data, RngSeed(3)).unwrap();
        assert_eq!(det.n_cal(), 5);
        let Inference::Ensemble(models) = det.inference() else { panic!() };
        assert_eq!(models.len(), 5);
    }

    #[test]
    fn split_structure() {
        let data = gaussian(200, 2, 1);
        let det = calibrate(&Strategy::split(), &iforest(), &data, RngSeed(3)).unwrap();
        assert_eq!(det.n_cal(), 100);
        let mut s = Strategy::split();
        s.method = Method::Split { calib_fraction: 0.5, max_calib: Some(30) };
        assert_eq!(calibrate(&s, &iforest(), &data, RngSeed(3)).unwrap().n_cal(), 30);
        let tiny = gaussian(1, 2, 1);
        assert!(calibrate(&Strategy::split(), &iforest(), &tiny, RngSeed(3)).is_err());
    }

    #[test]
    fn cv_structure() {
        let data = gaussian(23, 3, 2);
        let det = calibrate(&Strategy::cross_validation(4, true), &iforest(), &data, RngSeed(1)).unwrap();
        assert_eq!(det.n_cal(), 23);
        let Inference::Ensemble(models) = det.inference() else { panic!() };
        assert_eq!(models.len(), 4);
        assert!(calibrate(&Strategy::cross_validation(24, false), &iforest(), &data, RngSeed(1)).is_err());
    }

    #[test]
    fn bootstrap_calibration_size_is_total_oob() {
        let data = gaussian(100, 2, 4);
        let det = calibrate(&Strategy::bootstrap(20, 0.95, false), &iforest(), &data, RngSeed(9)).unwrap();
        let plan = make_plan(100, PlanSpec::Bootstrap { draws: 20, ratio: 0.95 }, RngSeed(9).stream(b"plan")).unwrap();
        assert_eq!(det.n_cal(), plan.holdout_total());

        let mut s = Strategy::bootstrap(20, 0.95, true);
        s.method = Method::Bootstrap { draws: 20, ratio: 0.95, calib_size: Some(150) };
        let det = calibrate(&s, &iforest(), &data, RngSeed(9)).unwrap();
        assert_eq!(det.n_cal(), 150);
    }

    #[test]
    fn bootstrap_mean_calibration_size() {
        let data = gaussian(100, 1, 4);
        let seeds = 200;
        let total: usize = (0..seeds)
            .map(|s| calibrate(&Strategy::bootstrap(20, 0.95, false), &CentreAlgo, &data, RngSeed(s)).unwrap().n_cal())
            .sum();
        let mean = total as f64 / seeds as f64;
        let analytic = 20.0 * 100.0 * 0.99f64.powi(95);
        assert!((mean - analytic).abs() < 0.02 * analytic, "{mean} vs {analytic}");
        assert!((mean - 772.0).abs() < 20.0);
    }

    #[test]
    fn identical_fold_models_match_single_model() {
        let data = gaussian(40, 2, 5);
        let batch = gaussian(15, 2, 6);
        let plus = calibrate(&Strategy::cross_validation(5, true), &CentreAlgo, &data, RngSeed(1)).unwrap();
        let base = calibrate(&Strategy::cross_validation(5, false), &CentreAlgo, &data, RngSeed(1)).unwrap();
        assert_eq!(plus.p_values(&batch).unwrap(), base.p_values(&batch).unwrap());
        let mean = calibrate(
            &Strategy::cross_validation(5, true).with_aggregation(Aggregation::Mean),
            &CentreAlgo, &data, RngSeed(1),
        ).unwrap();
        assert_eq!(mean.p_values(&batch).unwrap(), base.p_values(&batch).unwrap());
    }

    #[test]
    fn cv_with_k_equal_n_is_jackknife() {
        let data = gaussian(12, 2, 8);
        let batch = gaussian(10, 2, 9);
        for plus in [false, true] {
            let jk = calibrate(&Strategy::jackknife(plus), &iforest(), &data, RngSeed(4)).unwrap();
            let cv = calibrate(&Strategy::cross_validation(12, plus), &iforest(), &data, RngSeed(4)).unwrap();
            assert_eq!(jk.calibration_scores(), cv.calibration_scores());
            assert_eq!(jk.p_values(&batch).unwrap(), cv.p_values(&batch).unwrap());
        }
    }

    #[test]
    fn p_values_bounded_and_dimension_checked() {
        let data = gaussian(60, 3, 1);
        let det = calibrate(&Strategy::cross_validation(5, false), &iforest(), &data, RngSeed(2)).unwrap();
        let mut far = gaussian(20, 3, 2);
        far = FeatureMatrix::new(20, 3, far.as_slice().iter().map(|v| v + 50.0).collect()).unwrap();
        let p = det.p_values(&far).unwrap();
        let floor = 1.0 / (det.n_cal() + 1) as f64;
        assert!(p.iter().all(|&v| v >= floor && v <= 1.0));
        assert!(p.iter().all(|&v| v == floor), "far points get the minimum p-value");
        assert!(matches!(det.p_values(&gaussian(2, 2, 1)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn calibration_is_deterministic() {
        let data = gaussian(50, 2, 3);
        let batch = gaussian(10, 2, 4);
        for s in [Strategy::split(), Strategy::jackknife(true), Strategy::cross_validation(5, false), Strategy::bootstrap(6, 0.9, true)] {
            let a = calibrate(&s, &iforest(), &data, RngSeed(11)).unwrap();
            let b = calibrate(&s, &iforest(), &data, RngSeed(11)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.p_values(&batch).unwrap(), b.p_values(&batch).unwrap());
        }
    }

    #[test]
    fn fold_errors_propagate() {
        let data = gaussian(10, 2, 3);
        let mut lof = DetectorConfig::new(Algorithm::Lof);
        lof.lof_neighbors = 9; // fold models see only 9 rows
        assert!(calibrate(&Strategy::jackknife(false), &lof, &data, RngSeed(0)).is_err());
    }

    #[test]
    fn jackknife_permutation_invariance() {
        // PCA is seed-free, so permuting training rows permutes the
        // calibration scores and leaves the multiset unchanged.
        let data = gaussian(25, 4, 6);
        let batch = gaussian(30, 4, 7);
        let mut cfg = DetectorConfig::new(Algorithm::Pca);
        cfg.pca_components = 2;
        let perm: Vec<usize> = (0..25).rev().collect();
        let a = calibrate(&Strategy::jackknife(false), &cfg, &data, RngSeed(1)).unwrap();
        let b = calibrate(&Strategy::jackknife(false), &cfg, &data.select(&perm), RngSeed(2)).unwrap();
        for (x, y) in a.calibration_scores().iter().zip(b.calibration_scores()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        assert_eq!(a.p_values(&batch).unwrap(), b.p_values(&batch).unwrap());
    }
}
