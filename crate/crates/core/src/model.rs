//! Datasets, scores and the fit/score contract shared by every descriptor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × m` table of finite attribute values, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Validates a table of rows. Rows must be non-empty, of equal length and
    /// finite.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::shape("table has no rows"));
        }
        let n_cols = rows[0].as_ref().len();
        if n_cols == 0 {
            return Err(Error::shape("table has no columns"));
        }
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::shape(format!(
                    "row {i} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_vec(n_rows, n_cols, values)
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::shape(format!("empty matrix ({n_rows}×{n_cols})")));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::shape(format!(
                "buffer of length {} cannot hold {n_rows}×{n_cols} values",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// A new matrix holding the given rows, in the given order.
    pub fn select_rows(&self, ids: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(ids.len() * self.n_cols);
        for &i in ids {
            if i >= self.n_rows {
                return Err(Error::invalid(format!(
                    "row id {i} out of range for {} rows",
                    self.n_rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::from_vec(ids.len(), self.n_cols, values)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_vec(
            self.n_rows,
            self.n_cols,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

/// A confidence of target-class membership in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Score(value))
        } else {
            Err(Error::invalid(format!("score {value} outside [0, 1]")))
        }
    }

    /// Callers guarantee `value ∈ [0, 1]`.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Score(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.0
    }
}

/// Maps a distance in `[0, ∞]` to a score with `z ↦ 1 / (1 + z)`.
pub fn distance_to_score(z: f64) -> Result<Score> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::invalid(format!(
            "distance must be nonnegative, got {z}"
        )));
    }
    Ok(Score::clamped(if z.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + z)
    }))
}

/// A fitted, immutable scorer from attribute space to `[0, 1]`.
pub trait DataDescription: Send + Sync {
    /// Expected query dimensionality.
    fn dim(&self) -> usize;

    fn score(&self, query: &[f64]) -> Result<Score>;

    fn score_all(&self, queries: &FeatureMatrix) -> Result<Vec<Score>> {
        queries.rows().map(|q| self.score(q)).collect()
    }
}

/// A hyperparameter choice that, given target-class training data, yields a
/// data description.
pub trait DataDescriptor {
    type Description: DataDescription;

    fn fit(&self, train: &FeatureMatrix) -> Result<Self::Description>;
}

/// Rejects queries of the wrong length or with non-finite values.
pub(crate) fn check_query(dim: usize, query: &[f64]) -> Result<()> {
    if query.len() != dim {
        return Err(Error::shape(format!(
            "query has {} attributes, model expects {dim}",
            query.len()
        )));
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("query contains a non-finite value"));
    }
    Ok(())
}
