use serde::{Deserialize, Serialize};

use super::{clamp_neighbors, require_two_rows};
use crate::error::{Error, Result};
use crate::model::{check_query, DataDescription, DataDescriptor, FeatureMatrix, Score};
use crate::neighbors::{Metric, NeighborIndex, NeighborTable};
use crate::owa::WeightVector;

/// Average Localised Proximity with linearly decreasing weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alp {
    pub k: usize,
    pub l: usize,
    pub metric: Metric,
}

impl DataDescriptor for Alp {
    type Description = AlpModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<AlpModel> {
        AlpModel::fit(train, self.metric, self.k, self.l)
    }
}

/// Intermediate quantities of one ALP evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlpTerms {
    /// `D_i(y)`: weighted `i`-th neighbour distance of the query's neighbours.
    pub local: Vec<f64>,
    /// `lp_i(y) = D_i / (D_i + d_i)`.
    pub proximity: Vec<f64>,
    pub alp: f64,
}

/// `D_i / (D_i + d_i)`, taken as 1 when both vanish.
#[inline]
pub(crate) fn localised_proximity(local: f64, d: f64) -> f64 {
    let denom = local + d;
    if denom == 0.0 {
        1.0
    } else {
        local / denom
    }
}

/// Evaluates ALP from distance profiles alone.
///
/// `query_profile[i]` is `d_{i+1}(y)`; `neighbor_profiles[j]` is the
/// self-excluded profile `d_1, d_2, …` of the query's `(j+1)`-th nearest
/// training row. Only the first `k = w_k.len()` entries of each profile and
/// the first `l = w_l.len()` neighbour profiles are used.
pub fn alp_terms<P: AsRef<[f64]>>(
    query_profile: &[f64],
    neighbor_profiles: &[P],
    w_k: &WeightVector,
    w_l: &WeightVector,
) -> Result<AlpTerms> {
    let (k, l) = (w_k.len(), w_l.len());
    if query_profile.len() < k {
        return Err(Error::shape(format!(
            "query profile has {} distances, need {k}",
            query_profile.len()
        )));
    }
    if neighbor_profiles.len() < l || neighbor_profiles[..l].iter().any(|p| p.as_ref().len() < k) {
        return Err(Error::shape(format!(
            "need {l} neighbour profiles of at least {k} distances"
        )));
    }
    let local: Vec<f64> = (0..k)
        .map(|i| {
            w_l.as_slice()
                .iter()
                .zip(neighbor_profiles)
                .map(|(w, p)| w * p.as_ref()[i])
                .sum()
        })
        .collect();
    let proximity: Vec<f64> = local
        .iter()
        .zip(query_profile)
        .map(|(&big_d, &d)| localised_proximity(big_d, d))
        .collect();
    let alp = w_k.apply(&proximity)?;
    Ok(AlpTerms {
        local,
        proximity,
        alp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlpModel {
    index: NeighborIndex,
    w_k: WeightVector,
    w_l: WeightVector,
    /// `d_1(x) … d_k(x)` for each training row, self-excluded.
    table: NeighborTable,
}

impl AlpModel {
    /// Linear weights of lengths `k` and `l`, both clamped into `[1, n − 1]`.
    pub fn fit(x: &FeatureMatrix, metric: Metric, k: usize, l: usize) -> Result<Self> {
        require_two_rows(x, "ALP")?;
        let n = x.n_rows();
        Self::with_weights(
            x,
            metric,
            WeightVector::linear(clamp_neighbors(k, n))?,
            WeightVector::linear(clamp_neighbors(l, n))?,
        )
    }

    /// Arbitrary weight vectors. `w_k` may be at most `n − 1` long, since
    /// training profiles exclude the row itself; `w_l` may use all `n` rows.
    pub fn with_weights(
        x: &FeatureMatrix,
        metric: Metric,
        w_k: WeightVector,
        w_l: WeightVector,
    ) -> Result<Self> {
        require_two_rows(x, "ALP")?;
        let n = x.n_rows();
        if w_k.len() > n - 1 {
            return Err(Error::invalid(format!(
                "k = {} exceeds n − 1 = {}",
                w_k.len(),
                n - 1
            )));
        }
        if w_l.len() > n {
            return Err(Error::invalid(format!("l = {} exceeds n = {n}", w_l.len())));
        }
        let index = NeighborIndex::build(x.clone(), metric);
        let table = index.self_table(w_k.len())?;
        Ok(AlpModel {
            index,
            w_k,
            w_l,
            table,
        })
    }

    pub fn k(&self) -> usize {
        self.w_k.len()
    }

    pub fn l(&self) -> usize {
        self.w_l.len()
    }

    pub fn terms(&self, query: &[f64]) -> Result<AlpTerms> {
        check_query(self.index.dim(), query)?;
        let (k, l) = (self.k(), self.l());
        let nb = self.index.query(query, k.max(l), None)?;
        let profiles: Vec<&[f64]> = nb.ids[..l].iter().map(|&o| self.table.dists(o)).collect();
        alp_terms(&nb.dists[..k], &profiles, &self.w_k, &self.w_l)
    }
}

impl DataDescription for AlpModel {
    fn dim(&self) -> usize {
        self.index.dim()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        Ok(Score::clamped(self.terms(query)?.alp))
    }
}
