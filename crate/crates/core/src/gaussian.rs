//! Mahalanobis distance to the training mean, with a pseudo-inverse
//! covariance so that rank-deficient data still fits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_query, distance_to_score, DataDescription, DataDescriptor, FeatureMatrix, Score,
};

/// Eigenvalues below this fraction of the largest one are treated as zero.
const RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Mahalanobis;

impl DataDescriptor for Mahalanobis {
    type Description = MdModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<MdModel> {
        MdModel::fit(train)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdModel {
    mean: Vec<f64>,
    /// Row-major `m × m` pseudo-inverse of the sample covariance.
    precision: Vec<f64>,
}

/// Column means and sample covariance (divisor `n − 1`).
pub fn mean_and_covariance(x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (x.n_rows(), x.n_cols());
    if n < 2 {
        return Err(Error::insufficient(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let mut mean = vec![0.0; m];
    for row in x.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let mut cov = vec![0.0; m * m];
    for row in x.rows() {
        for a in 0..m {
            let da = row[a] - mean[a];
            for b in a..m {
                cov[a * m + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v = cov[a * m + b] / (n - 1) as f64;
            cov[a * m + b] = v;
            cov[b * m + a] = v;
        }
    }
    Ok((mean, cov))
}

/// Moore–Penrose pseudo-inverse of a symmetric positive-semidefinite matrix.
pub fn symmetric_pseudo_inverse(m: usize, matrix: &[f64]) -> Vec<f64> {
    let s = DMatrix::from_row_slice(m, m, matrix);
    let eig = SymmetricEigen::new(s);
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = RELATIVE_CUTOFF * largest;
    let inv_vals = DVector::from_iterator(
        m,
        eig.eigenvalues
            .iter()
            .map(|&v| if v > cutoff && v > 0.0 { 1.0 / v } else { 0.0 }),
    );
    let v = &eig.eigenvectors;
    let p = v * DMatrix::from_diagonal(&inv_vals) * v.transpose();
    let mut out = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            // Symmetrise away rounding asymmetry.
            out[a * m + b] = 0.5 * (p[(a, b)] + p[(b, a)]);
        }
    }
    out
}

impl MdModel {
    pub fn fit(x: &FeatureMatrix) -> Result<Self> {
        let (mean, cov) = mean_and_covariance(x)?;
        let precision = symmetric_pseudo_inverse(x.n_cols(), &cov);
        Ok(MdModel { mean, precision })
    }

    pub fn from_parts(mean: Vec<f64>, precision: Vec<f64>) -> Result<Self> {
        if precision.len() != mean.len() * mean.len() {
            return Err(Error::shape("precision matrix does not match mean"));
        }
        Ok(MdModel { mean, precision })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    pub fn distance(&self, query: &[f64]) -> Result<f64> {
        check_query(self.mean.len(), query)?;
        let m = self.mean.len();
        let diff: Vec<f64> = query.iter().zip(&self.mean).map(|(y, mu)| y - mu).collect();
        let mut quad = 0.0;
        for a in 0..m {
            let row = &self.precision[a * m..(a + 1) * m];
            quad += diff[a] * row.iter().zip(&diff).map(|(p, d)| p * d).sum::<f64>();
        }
        Ok(quad.max(0.0).sqrt())
    }
}

impl DataDescription for MdModel {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        distance_to_score(self.distance(query)?)
    }
}
