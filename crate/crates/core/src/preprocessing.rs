//! Robust per-attribute rescaling by interquartile range, and the sparsity
//! statistic of a dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Per-attribute divisors derived from the interquartile range of training
/// data. Every divisor is positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqrScaler {
    scale: Vec<f64>,
}

impl IqrScaler {
    /// Fits divisors on `train`. Attributes with zero IQR get divisor 1.
    pub fn fit(train: &FeatureMatrix) -> Self {
        let scale = (0..train.n_cols())
            .map(|j| {
                let mut col = train.column(j);
                col.sort_by(f64::total_cmp);
                let iqr = percentile_sorted(&col, 75.0) - percentile_sorted(&col, 25.0);
                if iqr > 0.0 && iqr.is_finite() {
                    iqr
                } else {
                    1.0
                }
            })
            .collect();
        IqrScaler { scale }
    }

    /// Rebuilds a scaler from stored divisors.
    pub fn from_divisors(scale: Vec<f64>) -> Result<Self> {
        if scale.is_empty() || scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("IQR divisors must be positive and finite"));
        }
        Ok(IqrScaler { scale })
    }

    pub fn divisors(&self) -> &[f64] {
        &self.scale
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.n_cols() != self.scale.len() {
            return Err(Error::shape(format!(
                "matrix has {} attributes, scaler was fitted on {}",
                x.n_cols(),
                self.scale.len()
            )));
        }
        let values = x
            .rows()
            .flat_map(|row| row.iter().zip(&self.scale).map(|(v, s)| v / s))
            .collect();
        FeatureMatrix::from_vec(x.n_rows(), x.n_cols(), values)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.scale.len() {
            return Err(Error::shape(format!(
                "row has {} attributes, scaler was fitted on {}",
                row.len(),
                self.scale.len()
            )));
        }
        Ok(row.iter().zip(&self.scale).map(|(v, s)| v / s).collect())
    }
}

pub fn fit_iqr_scaler(train: &FeatureMatrix) -> IqrScaler {
    IqrScaler::fit(train)
}

pub fn apply_scaler(scaler: &IqrScaler, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    scaler.apply(x)
}

/// Percentile `q ∈ [0, 100]` of sorted values, interpolating linearly between
/// order statistics at fractional rank `q/100 · (n − 1)`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Fraction of all cells equal to the mode of their column.
pub fn sparsity(x: &FeatureMatrix) -> f64 {
    let modal: usize = (0..x.n_cols())
        .map(|j| {
            let mut col = x.column(j);
            col.sort_by(f64::total_cmp);
            col.chunk_by(|a, b| a == b)
                .map(<[f64]>::len)
                .max()
                .unwrap_or(0)
        })
        .sum();
    modal as f64 / (x.n_rows() * x.n_cols()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Percentile by brute force: the value at fractional rank, found by
    /// counting how many values lie strictly below each candidate.
    fn percentile_oracle(values: &[f64], q: f64) -> f64 {
        let n = values.len();
        let order_stat = |r: usize| {
            *values
                .iter()
                .find(|&&v| {
                    let below = values.iter().filter(|&&w| w < v).count();
                    let at_most = values.iter().filter(|&&w| w <= v).count();
                    below <= r && r < at_most
                })
                .unwrap()
        };
        let pos = q / 100.0 * (n - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        order_stat(lo) + (order_stat(hi) - order_stat(lo)) * (pos - lo as f64)
    }

    #[test]
    fn iqr_divisors() {
        // Oracle values: [0,1,2,3,4] → 3 − 1 = 2; [0,10] → 7.5 − 2.5 = 5.
        for (data, expected) in [(vec![4.0, 0.0, 2.0, 1.0, 3.0], 2.0), (vec![0.0, 10.0], 5.0)] {
            let oracle = percentile_oracle(&data, 75.0) - percentile_oracle(&data, 25.0);
            assert_eq!(oracle, expected);
            assert_eq!(IqrScaler::fit(&col(&data)).divisors(), &[expected]);
        }
        assert_eq!(IqrScaler::fit(&col(&[5.0, 5.0, 5.0])).divisors(), &[1.0]);
    }

    #[test]
    fn apply_examples() {
        let s = IqrScaler::from_divisors(vec![2.0]).unwrap();
        assert_eq!(s.apply(&col(&[0.0, 4.0])).unwrap().as_slice(), &[0.0, 2.0]);

        let x = FeatureMatrix::from_rows(&[[1.5, -2.0], [3.0, 7.0]]).unwrap();
        let id = IqrScaler::from_divisors(vec![1.0, 1.0]).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);

        let wrong = IqrScaler::from_divisors(vec![1.0]).unwrap();
        assert!(matches!(wrong.apply(&x), Err(Error::Shape(_))));
        assert!(IqrScaler::from_divisors(vec![0.0]).is_err());
    }

    #[test]
    fn sparsity_examples() {
        assert!((sparsity(&col(&[1.0, 1.0, 2.0])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sparsity(&col(&[1.0, 2.0, 3.0, 4.0])), 0.25);
        let two = FeatureMatrix::from_rows(&[[1.0, 2.0], [1.0, 3.0]]).unwrap();
        assert_eq!(sparsity(&two), 0.75);
    }

    fn matrix_strategy() -> impl Strategy<Value = FeatureMatrix> {
        (1usize..20, 1usize..4).prop_flat_map(|(n, m)| {
            prop::collection::vec(-50i32..50, n * m).prop_map(move |v| {
                FeatureMatrix::from_vec(n, m, v.into_iter().map(|x| x as f64 / 4.0).collect())
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn scaled_training_data_has_unit_iqr(x in matrix_strategy()) {
            let scaled = IqrScaler::fit(&x).apply(&x).unwrap();
            for j in 0..x.n_cols() {
                let raw = x.column(j);
                let iqr_raw = percentile_oracle(&raw, 75.0) - percentile_oracle(&raw, 25.0);
                let c = scaled.column(j);
                let iqr = percentile_oracle(&c, 75.0) - percentile_oracle(&c, 25.0);
                if iqr_raw == 0.0 {
                    prop_assert_eq!(iqr, 0.0);
                } else {
                    prop_assert!((iqr - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn apply_is_linear(x in matrix_strategy(), a in -5.0f64..5.0) {
            let s = IqrScaler::fit(&x);
            let lhs = s.apply(&x.scaled(a).unwrap()).unwrap();
            let rhs = s.apply(&x).unwrap().scaled(a).unwrap();
            for (l, r) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
            }
        }

        #[test]
        fn sparsity_bounds(x in matrix_strategy()) {
            let s = sparsity(&x);
            prop_assert!(s >= 1.0 / x.n_rows() as f64 - 1e-15 && s <= 1.0);
        }
    }
}
