use serde::{Deserialize, Serialize};

use super::{clamp_neighbors, require_two_rows};
use crate::error::Result;
use crate::model::{
    check_query, distance_to_score, DataDescription, DataDescriptor, FeatureMatrix, Score,
};
use crate::neighbors::{Metric, NeighborIndex};

/// Nearest Neighbour Distance: scores `1 / (1 + d_k(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nnd {
    pub k: usize,
    pub metric: Metric,
}

impl Default for Nnd {
    fn default() -> Self {
        Nnd {
            k: 1,
            metric: Metric::Manhattan,
        }
    }
}

impl DataDescriptor for Nnd {
    type Description = NndModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<NndModel> {
        NndModel::fit(train, self.metric, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NndModel {
    index: NeighborIndex,
    k: usize,
}

impl NndModel {
    /// `k` is clamped into `[1, n − 1]`.
    pub fn fit(x: &FeatureMatrix, metric: Metric, k: usize) -> Result<Self> {
        require_two_rows(x, "NND")?;
        Ok(NndModel {
            k: clamp_neighbors(k, x.n_rows()),
            index: NeighborIndex::build(x.clone(), metric),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    /// `d_k(y)`.
    pub fn kth_distance(&self, query: &[f64]) -> Result<f64> {
        check_query(self.index.dim(), query)?;
        let profile = self.index.kth_distance_profile(query, self.k, None)?;
        Ok(profile[self.k - 1])
    }
}

impl DataDescription for NndModel {
    fn dim(&self) -> usize {
        self.index.dim()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        distance_to_score(self.kth_distance(query)?)
    }
}
