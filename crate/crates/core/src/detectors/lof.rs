use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::FeatureMatrix;

/// Local Outlier Factor in novelty mode: queries are compared against the
/// stored training points. Conformity score = `-LOF`.
///
/// Reachability distances are floored at `EPSILON * diameter` of the
/// training data so duplicated rows have a finite local density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOutlierFactor {
    k: usize,
    reference: FeatureMatrix,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
    floor: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` nearest rows of `reference` to `x` as `(distance, row)`, skipping
/// `exclude`. Ties are broken by row index.
fn nearest(reference: &FeatureMatrix, x: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = reference
        .rows()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(i, r)| (distance(x, r), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    d
}

impl LocalOutlierFactor {
    /// Caller guarantees `1 <= k < data.n_rows()`.
    pub fn fit(data: &FeatureMatrix, k: usize) -> Self {
        let n = data.n_rows();
        debug_assert!(k >= 1 && k < n);

        let mut diameter = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(distance(data.row(i), data.row(j)));
            }
        }
        let floor = if diameter > 0.0 {
            f64::EPSILON * diameter
        } else {
            f64::EPSILON
        };

        let neighbours: Vec<Vec<(f64, usize)>> =
            (0..n).map(|i| nearest(data, data.row(i), k, Some(i))).collect();
        let k_distance: Vec<f64> = neighbours.iter().map(|nb| nb[k - 1].0).collect();
        let lrd = neighbours
            .iter()
            .map(|nb| local_density(nb, &k_distance, floor))
            .collect();

        LocalOutlierFactor {
            k,
            reference: data.clone(),
            k_distance,
            lrd,
            floor,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The raw LOF value of `x` against the training set.
    pub fn lof(&self, x: &[f64]) -> f64 {
        let nb = nearest(&self.reference, x, self.k, None);
        let lrd_x = local_density(&nb, &self.k_distance, self.floor);
        let mean_lrd = nb.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / nb.len() as f64;
        mean_lrd / lrd_x
    }
}

fn local_density(neighbours: &[(f64, usize)], k_distance: &[f64], floor: f64) -> f64 {
    let total: f64 = neighbours
        .iter()
        .map(|&(d, o)| d.max(k_distance[o]).max(floor))
        .sum();
    neighbours.len() as f64 / total
}

impl Scorer for LocalOutlierFactor {
    fn dim(&self) -> usize {
        self.reference.n_cols()
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        -self.lof(x)
    }
}
