//! One-class scoring functions.
//!
//! Every model maps a point to a conformity score where larger means more
//! normal. Native scores are adapted as follows:
//!
//! * Isolation Forest: mean path length over trees (used directly).
//! * Local Outlier Factor: negated LOF value.
//! * PCA: negated squared reconstruction error onto the retained axes.

mod iforest;
mod lof;
mod pca;

pub use iforest::{average_path_length, IsolationForest};
pub use lof::LocalOutlierFactor;
pub use pca::PcaModel;

use serde::{Deserialize, Serialize};

use crate::{Error, FeatureMatrix, Result, RngSeed};

/// A trained scorer. Scoring is a pure function of the model and the point.
pub trait Scorer {
    /// Feature dimension the model was trained on.
    fn dim(&self) -> usize;

    /// Conformity score of one point of length [`Scorer::dim`].
    fn score_row(&self, x: &[f64]) -> f64;

    fn score(&self, points: &FeatureMatrix) -> Result<Vec<f64>> {
        points.check_dim(self.dim())?;
        Ok(points.rows().map(|x| self.score_row(x)).collect())
    }
}

/// Something that can be trained into a [`Scorer`] from inlier data.
pub trait OneClassAlgorithm: Sync {
    type Model: Scorer + Send + Sync;

    fn fit(&self, train: &FeatureMatrix, seed: RngSeed) -> Result<Self::Model>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    IsolationForest,
    Lof,
    Pca,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iforest" | "isolation_forest" => Ok(Algorithm::IsolationForest),
            "lof" => Ok(Algorithm::Lof),
            "pca" => Ok(Algorithm::Pca),
            other => Err(Error::invalid(format!(
                "unknown detector '{other}' (expected iforest, lof or pca)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::IsolationForest => "iforest",
            Algorithm::Lof => "lof",
            Algorithm::Pca => "pca",
        })
    }
}

/// Detector choice and hyper-parameters. Defaults: 100 trees with
/// sub-samples of 256 rows, 20 LOF neighbours, 3 principal components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub algorithm: Algorithm,
    pub if_trees: usize,
    pub if_subsample: usize,
    pub lof_neighbors: usize,
    pub pca_components: usize,
    pub seed: RngSeed,
}

impl DetectorConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        DetectorConfig {
            algorithm,
            if_trees: 100,
            if_subsample: 256,
            lof_neighbors: 20,
            pca_components: 3,
            seed: RngSeed(0),
        }
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the configuration against a training set shape.
    pub fn validate(&self, n_train: usize, dim: usize) -> Result<()> {
        if n_train < 2 {
            return Err(Error::invalid(format!(
                "detectors need at least 2 training rows, got {n_train}"
            )));
        }
        match self.algorithm {
            Algorithm::IsolationForest => {
                if self.if_trees == 0 || self.if_subsample == 0 {
                    return Err(Error::invalid(
                        "isolation forest needs at least one tree and a positive subsample size",
                    ));
                }
            }
            Algorithm::Lof => {
                if self.lof_neighbors == 0 || self.lof_neighbors >= n_train {
                    return Err(Error::invalid(format!(
                        "LOF needs 1 <= neighbours < training rows, got k={} with {n_train} rows",
                        self.lof_neighbors
                    )));
                }
            }
            Algorithm::Pca => {
                if self.pca_components == 0 || self.pca_components > dim {
                    return Err(Error::invalid(format!(
                        "PCA needs 1 <= components <= features, got {} with {dim} features",
                        self.pca_components
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum DetectorModel {
    IsolationForest(IsolationForest),
    Lof(LocalOutlierFactor),
    Pca(PcaModel),
}

impl DetectorModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            DetectorModel::IsolationForest(_) => Algorithm::IsolationForest,
            DetectorModel::Lof(_) => Algorithm::Lof,
            DetectorModel::Pca(_) => Algorithm::Pca,
        }
    }
}

impl Scorer for DetectorModel {
    fn dim(&self) -> usize {
        match self {
            DetectorModel::IsolationForest(m) => m.dim(),
            DetectorModel::Lof(m) => m.dim(),
            DetectorModel::Pca(m) => m.dim(),
        }
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        match self {
            DetectorModel::IsolationForest(m) => m.score_row(x),
            DetectorModel::Lof(m) => m.score_row(x),
            DetectorModel::Pca(m) => m.score_row(x),
        }
    }
}

impl OneClassAlgorithm for DetectorConfig {
    type Model = DetectorModel;

    fn fit(&self, train: &FeatureMatrix, seed: RngSeed) -> Result<DetectorModel> {
        self.validate(train.n_rows(), train.n_cols())?;
        Ok(match self.algorithm {
            Algorithm::IsolationForest => DetectorModel::IsolationForest(IsolationForest::fit(
                train,
                self.if_trees,
                self.if_subsample,
                seed,
            )),
            Algorithm::Lof => {
                DetectorModel::Lof(LocalOutlierFactor::fit(train, self.lof_neighbors))
            }
            Algorithm::Pca => DetectorModel::Pca(PcaModel::fit(train, self.pca_components)),
        })
    }
}

/// Trains the configured detector with `config.seed`.
pub fn fit(config: &DetectorConfig, train: &FeatureMatrix) -> Result<DetectorModel> {
    config.fit(train, config.seed)
}

/// Conformity scores of every row of `points`.
pub fn score(model: &DetectorModel, points: &FeatureMatrix) -> Result<Vec<f64>> {
    model.score(points)
}
