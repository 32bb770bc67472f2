use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::FeatureMatrix;

/// Principal subspace of the training covariance. Conformity score is the
/// negated squared distance of a point to the affine subspace
/// `mean + span(axes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// Unit-norm principal axes, by decreasing eigenvalue. The largest
    /// magnitude entry of each axis is positive.
    axes: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Caller guarantees `n >= 2` and `1 <= components <= d`.
    pub fn fit(data: &FeatureMatrix, components: usize) -> Self {
        let (n, d) = (data.n_rows(), data.n_cols());
        let mut mean = vec![0.0; d];
        for r in data.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = DMatrix::<f64>::zeros(d, d);
        for r in data.rows() {
            for i in 0..d {
                let ci = r[i] - mean[i];
                for j in i..d {
                    cov[(i, j)] += ci * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / (n - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }

        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let mut axes = Vec::with_capacity(components);
        let mut eigenvalues = Vec::with_capacity(components);
        for &c in order.iter().take(components) {
            let mut axis: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let lead = axis
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
            if axis[lead] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            axes.push(axis);
            eigenvalues.push(eig.eigenvalues[c]);
        }
        PcaModel {
            mean,
            axes,
            eigenvalues,
        }
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Squared distance from `x` to the retained principal subspace.
    pub fn reconstruction_error(&self, x: &[f64]) -> f64 {
        let mut residual: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        for axis in &self.axes {
            let proj: f64 = residual.iter().zip(axis).map(|(r, a)| r * a).sum();
            residual.iter_mut().zip(axis).for_each(|(r, a)| *r -= proj * a);
        }
        residual.iter().map(|r| r * r).sum()
    }
}

impl Scorer for PcaModel {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        -self.reconstruction_error(x)
    }
}
