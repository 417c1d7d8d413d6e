use serde::{Deserialize, Serialize};

use super::{clamp_neighbors, require_two_rows};
use crate::error::Result;
use crate::model::{check_query, DataDescription, DataDescriptor, FeatureMatrix, Score};
use crate::neighbors::{Metric, NeighborIndex};

/// Localised Nearest Neighbour Distance: `d_k(y)` relative to the k-th
/// neighbour distance of the k-th neighbour of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lnnd {
    pub k: usize,
    pub metric: Metric,
}

impl DataDescriptor for Lnnd {
    type Description = LnndModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<LnndModel> {
        LnndModel::fit(train, self.metric, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnndModel {
    index: NeighborIndex,
    k: usize,
    /// `d_k(x)` of every training row, self-excluded.
    local_kth: Vec<f64>,
}

/// `1 / (1 + d / local)`. A query at distance 0 scores 1; a positive
/// distance against a zero local distance scores 0.
pub fn localised_distance_score(d: f64, local: f64) -> Score {
    if d == 0.0 {
        Score::clamped(1.0)
    } else if local == 0.0 {
        Score::clamped(0.0)
    } else {
        Score::clamped(1.0 / (1.0 + d / local))
    }
}

impl LnndModel {
    pub fn fit(x: &FeatureMatrix, metric: Metric, k: usize) -> Result<Self> {
        require_two_rows(x, "LNND")?;
        let k = clamp_neighbors(k, x.n_rows());
        let index = NeighborIndex::build(x.clone(), metric);
        let table = index.self_table(k)?;
        let local_kth = (0..x.n_rows()).map(|r| table.kth(r, k)).collect();
        Ok(LnndModel {
            index,
            k,
            local_kth,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn local_kth(&self) -> &[f64] {
        &self.local_kth
    }
}

impl DataDescription for LnndModel {
    fn dim(&self) -> usize {
        self.index.dim()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        check_query(self.index.dim(), query)?;
        let nb = self.index.query(query, self.k, None)?;
        let d = nb.dists[self.k - 1];
        let local = self.local_kth[nb.ids[self.k - 1]];
        Ok(localised_distance_score(d, local))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn score_examples() {
        // d₁(4) = 1 via row 3; d₁(3) = 2 (nearest other row is 1); ld = 0.5.
        let m = LnndModel::fit(&line(&[0.0, 1.0, 3.0]), Metric::Manhattan, 1).unwrap();
        assert_eq!(m.local_kth(), &[1.0, 1.0, 2.0]);
        assert!((m.score(&[4.0]).unwrap().value() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.score(&[1.0]).unwrap().value(), 1.0);
    }

    #[test]
    fn degenerate_local_distance() {
        assert_eq!(localised_distance_score(0.0, 0.0).value(), 1.0);
        assert_eq!(localised_distance_score(0.0, 3.0).value(), 1.0);
        assert_eq!(localised_distance_score(2.0, 0.0).value(), 0.0);
        let m = LnndModel::fit(&line(&[5.0, 5.0, 5.0]), Metric::Manhattan, 1).unwrap();
        assert_eq!(m.score(&[6.0]).unwrap().value(), 0.0);
        assert_eq!(m.score(&[5.0]).unwrap().value(), 1.0);
    }
}
