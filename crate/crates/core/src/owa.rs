//! Ordered weighted averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// Nonincreasing weights in `[0, 1]` summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("weights must be nonincreasing"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(weights))
    }

    /// Linearly decreasing weights `p/T, (p−1)/T, …, 1/T` with `T = p(p+1)/2`.
    pub fn linear(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("linear weights need p ≥ 1"));
        }
        let t = (p * (p + 1)) as f64 / 2.0;
        Ok(WeightVector((1..=p).rev().map(|i| i as f64 / t).collect()))
    }

    pub fn uniform(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("uniform weights need p ≥ 1"));
        }
        Ok(WeightVector(vec![1.0 / p as f64; p]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `Σ wᵢ · y₍ᵢ₎` with `y₍ᵢ₎` the i-th largest value.
    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.0.len() {
            return Err(Error::shape(format!(
                "{} values for {} weights",
                values.len(),
                self.0.len()
            )));
        }
        let mut sorted = values.to_vec();
        Ok(self.apply_in_place(&mut sorted))
    }

    /// As [`apply`](Self::apply), reordering `values`; lengths must match.
    pub(crate) fn apply_in_place(&self, values: &mut [f64]) -> f64 {
        debug_assert_eq!(values.len(), self.0.len());
        values.sort_by(|a, b| b.total_cmp(a));
        self.0.iter().zip(values.iter()).map(|(w, v)| w * v).sum()
    }
}

pub fn linear_weights(p: usize) -> Result<WeightVector> {
    WeightVector::linear(p)
}

pub fn owa_apply(w: &WeightVector, values: &[f64]) -> Result<f64> {
    w.apply(values)
}
