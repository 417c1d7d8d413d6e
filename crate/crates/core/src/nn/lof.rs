use serde::{Deserialize, Serialize};

use super::{clamp_neighbors, require_two_rows};
use crate::error::Result;
use crate::model::{
    check_query, distance_to_score, DataDescription, DataDescriptor, FeatureMatrix, Score,
};
use crate::neighbors::{Metric, NeighborIndex, NeighborTable};

/// Local Outlier Factor, scored as `1 / (1 + lof_k(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lof {
    pub k: usize,
    pub metric: Metric,
}

impl DataDescriptor for Lof {
    type Description = LofModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<LofModel> {
        LofModel::fit(train, self.metric, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    index: NeighborIndex,
    k: usize,
    table: NeighborTable,
    /// `lrd_k` of each training row; `+∞` when its whole neighbourhood sits
    /// at distance 0.
    lrd: Vec<f64>,
}

/// Inverse of a mean reachability distance; a zero mean gives `+∞`.
fn inverse_mean(sum: f64, k: usize) -> f64 {
    if sum == 0.0 {
        f64::INFINITY
    } else {
        k as f64 / sum
    }
}

/// `lrd_k(x)` for every training row, from a self-excluded table of width ≥ k.
pub fn local_reachability_densities(table: &NeighborTable, k: usize) -> Vec<f64> {
    (0..table.n_rows())
        .map(|x| {
            let sum: f64 = table
                .dists(x)
                .iter()
                .zip(table.ids(x))
                .take(k)
                .map(|(&d, &o)| d.max(table.kth(o, k)))
                .sum();
            inverse_mean(sum, k)
        })
        .collect()
}

/// `lrd(neighbour) / lrd(query)`, with `∞ / ∞ := 1`.
pub fn lof_ratio(neighbor: f64, query: f64) -> f64 {
    match (neighbor.is_infinite(), query.is_infinite()) {
        (true, true) => 1.0,
        (false, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, false) => neighbor / query,
    }
}

/// `lof_k(y)` from the query's k nearest neighbours.
pub(crate) fn lof_value(
    dists: &[f64],
    ids: &[usize],
    table: &NeighborTable,
    lrd: &[f64],
    k: usize,
) -> f64 {
    let reach: f64 = dists[..k]
        .iter()
        .zip(&ids[..k])
        .map(|(&d, &o)| d.max(table.kth(o, k)))
        .sum();
    let lrd_y = inverse_mean(reach, k);
    ids[..k]
        .iter()
        .map(|&o| lof_ratio(lrd[o], lrd_y))
        .sum::<f64>()
        / k as f64
}

impl LofModel {
    pub fn fit(x: &FeatureMatrix, metric: Metric, k: usize) -> Result<Self> {
        require_two_rows(x, "LOF")?;
        let k = clamp_neighbors(k, x.n_rows());
        let index = NeighborIndex::build(x.clone(), metric);
        let table = index.self_table(k)?;
        let lrd = local_reachability_densities(&table, k);
        Ok(LofModel {
            index,
            k,
            table,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn training_lrd(&self) -> &[f64] {
        &self.lrd
    }

    pub fn lof(&self, query: &[f64]) -> Result<f64> {
        check_query(self.index.dim(), query)?;
        let nb = self.index.query(query, self.k, None)?;
        Ok(lof_value(
            &nb.dists,
            &nb.ids,
            &self.table,
            &self.lrd,
            self.k,
        ))
    }
}

impl DataDescription for LofModel {
    fn dim(&self) -> usize {
        self.index.dim()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        distance_to_score(self.lof(query)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn five_points_hand_computed() {
        // X = {0,1,2,3,4}, k = 2, self-excluded:
        //   d₂: 0→2, 1→1, 2→1, 3→1, 4→2
        //   rd sums: 0: 1+2=3; 1: 2+1=3; 2: 1+1=2; 3: 1+2=3; 4: 1+2=3
        //   lrd = 2/sum: 2/3, 2/3, 1, 2/3, 2/3
        // y = 2.5: neighbours 2 and 3 at 0.5 → rd = 1 + 1 → lrd(y) = 1
        // lof = (1 + 2/3)/2 = 5/6 → score 6/11
        let m = LofModel::fit(&line(&[0.0, 1.0, 2.0, 3.0, 4.0]), Metric::Manhattan, 2).unwrap();
        let expected = [2.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0, 2.0 / 3.0];
        for (a, b) in m.training_lrd().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((m.lof(&[2.5]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((m.score(&[2.5]).unwrap().value() - 6.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_training_points() {
        let m = LofModel::fit(&line(&[3.0; 6]), Metric::Manhattan, 3).unwrap();
        assert!(m.training_lrd().iter().all(|v| v.is_infinite()));
        assert_eq!(m.lof(&[3.0]).unwrap(), 1.0);
        assert_eq!(m.score(&[3.0]).unwrap().value(), 0.5);
        // A query away from the duplicates: lrd(y) finite, neighbours infinite.
        assert_eq!(m.score(&[4.0]).unwrap().value(), 0.0);
    }

    #[test]
    fn ratio_rules() {
        assert_eq!(lof_ratio(f64::INFINITY, f64::INFINITY), 1.0);
        assert_eq!(lof_ratio(2.0, f64::INFINITY), 0.0);
        assert_eq!(lof_ratio(f64::INFINITY, 2.0), f64::INFINITY);
        assert_eq!(lof_ratio(1.0, 2.0), 0.5);
    }
}
