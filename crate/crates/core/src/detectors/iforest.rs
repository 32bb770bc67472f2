use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::{FeatureMatrix, RngSeed};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful binary-search-tree lookup among
/// `n` points; the depth correction for leaves that still hold `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IsolationTree {
    nodes: Vec<Node>,
}

impl IsolationTree {
    fn build<R: Rng>(data: &FeatureMatrix, mut rows: Vec<usize>, max_depth: usize, rng: &mut R) -> Self {
        let mut tree = IsolationTree { nodes: Vec::new() };
        tree.grow(data, &mut rows, 0, max_depth, rng);
        tree
    }

    fn grow<R: Rng>(
        &mut self,
        data: &FeatureMatrix,
        rows: &mut [usize],
        depth: usize,
        max_depth: usize,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= max_depth || rows.len() <= 1 {
            return id;
        }

        let ranges: Vec<(usize, f64, f64)> = (0..data.n_cols())
            .filter_map(|f| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    let v = data.get(r, f);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        // Threshold in (lo, hi]: `x < t` keeps lo on the left, hi on the right.
        let mut threshold = hi - rng.random::<f64>() * (hi - lo);
        if threshold <= lo {
            threshold = hi;
        }

        let mut split = 0;
        for i in 0..rows.len() {
            if data.get(rows[i], feature) < threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(split);
        let left = self.grow(data, left_rows, depth + 1, max_depth, rng);
        let right = self.grow(data, right_rows, depth + 1, max_depth, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0usize;
        loop {
            match self.nodes[node] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[feature] < threshold { left } else { right };
                    depth += 1;
                }
                Node::Leaf { size } => return depth as f64 + average_path_length(size),
            }
        }
    }
}

/// Isolation forest; the conformity score is the mean path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    dim: usize,
    subsample: usize,
    trees: Vec<IsolationTree>,
}

impl IsolationForest {
    /// Grows `n_trees` trees on sub-samples of `min(subsample, n)` rows drawn
    /// without replacement, each limited to depth `ceil(log2(subsample))`.
    pub fn fit(data: &FeatureMatrix, n_trees: usize, subsample: usize, seed: RngSeed) -> Self {
        let n = data.n_rows();
        let subsample = subsample.clamp(1, n);
        let max_depth = (subsample.max(2) as f64).log2().ceil() as usize;
        let trees = (0..n_trees as u64)
            .map(|t| {
                let mut rng = seed.derive(t).rng();
                let rows = index::sample(&mut rng, n, subsample).into_vec();
                IsolationTree::build(data, rows, max_depth, &mut rng)
            })
            .collect();
        IsolationForest {
            dim: data.n_cols(),
            subsample,
            trees,
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Rows per tree after clamping to the training size.
    pub fn subsample(&self) -> usize {
        self.subsample
    }
}

impl Scorer for IsolationForest {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.path_length(x)).sum();
        total / self.trees.len() as f64
    }
}
