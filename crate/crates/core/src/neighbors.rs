//! Distance metrics and exact k-nearest-neighbour search.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Manhattan,
    Euclidean,
}

impl Metric {
    /// Distance between equal-length vectors; callers check lengths.
    #[inline]
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            Metric::Manhattan => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            Metric::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Manhattan => "manhattan",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "manhattan" | "l1" => Ok(Metric::Manhattan),
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

pub fn distance(metric: Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(metric.eval(x, y))
}

/// Nearest training rows of a query, sorted by ascending distance with ties
/// broken by ascending row id.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    pub ids: Vec<usize>,
    pub dists: Vec<f64>,
}

/// Exact brute-force k-NN index over a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborIndex {
    data: FeatureMatrix,
    metric: Metric,
}

#[inline]
fn by_distance_then_id(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl NeighborIndex {
    pub fn build(data: FeatureMatrix, metric: Metric) -> Self {
        NeighborIndex { data, metric }
    }

    pub fn len(&self) -> usize {
        self.data.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.data.n_cols()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn data(&self) -> &FeatureMatrix {
        &self.data
    }

    fn candidates(&self, query: &[f64], exclude: Option<usize>) -> Vec<(f64, usize)> {
        self.data
            .rows()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude)
            .map(|(i, row)| (self.metric.eval(query, row), i))
            .collect()
    }

    /// The `k` nearest training rows of `query`, skipping row `exclude`.
    pub fn query(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<Neighbors> {
        if query.len() != self.dim() {
            return Err(Error::shape(format!(
                "query has {} attributes, index holds {}",
                query.len(),
                self.dim()
            )));
        }
        if let Some(e) = exclude {
            if e >= self.len() {
                return Err(Error::invalid(format!("excluded row {e} out of range")));
            }
        }
        let available = self.len() - usize::from(exclude.is_some());
        if k == 0 || k > available {
            return Err(Error::invalid(format!("k = {k} outside [1, {available}]")));
        }
        let mut cand = self.candidates(query, exclude);
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_distance_then_id);
            cand.truncate(k);
        }
        cand.sort_unstable_by(by_distance_then_id);
        Ok(Neighbors {
            ids: cand.iter().map(|c| c.1).collect(),
            dists: cand.iter().map(|c| c.0).collect(),
        })
    }

    /// Distances `d_1(y) ≤ … ≤ d_k(y)`.
    pub fn kth_distance_profile(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Result<Vec<f64>> {
        Ok(self.query(query, k, exclude)?.dists)
    }

    /// Self-excluded neighbours of every training row, `width` per row.
    pub fn self_table(&self, width: usize) -> Result<NeighborTable> {
        let n = self.len();
        if width == 0 || width + 1 > n {
            return Err(Error::invalid(format!(
                "table width {width} outside [1, {}]",
                n.saturating_sub(1)
            )));
        }
        let mut ids = Vec::with_capacity(n * width);
        let mut dists = Vec::with_capacity(n * width);
        for (i, row) in self.data.rows().enumerate() {
            let nb = self.query(row, width, Some(i))?;
            ids.extend(nb.ids);
            dists.extend(nb.dists);
        }
        Ok(NeighborTable { width, ids, dists })
    }
}

pub fn build_index(x: &FeatureMatrix, metric: Metric) -> NeighborIndex {
    NeighborIndex::build(x.clone(), metric)
}

pub fn query_knn(
    index: &NeighborIndex,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Result<Neighbors> {
    index.query(query, k, exclude)
}

pub fn kth_distance_profile(
    index: &NeighborIndex,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<f64>> {
    index.kth_distance_profile(query, k, exclude)
}

/// For each training row, its `width` nearest other training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTable {
    width: usize,
    ids: Vec<usize>,
    dists: Vec<f64>,
}

impl NeighborTable {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len() / self.width
    }

    /// `d_1(x) … d_width(x)` of training row `x`.
    #[inline]
    pub fn dists(&self, row: usize) -> &[f64] {
        &self.dists[row * self.width..(row + 1) * self.width]
    }

    #[inline]
    pub fn ids(&self, row: usize) -> &[usize] {
        &self.ids[row * self.width..(row + 1) * self.width]
    }

    /// `d_i(x)` for 1-based `i`.
    #[inline]
    pub fn kth(&self, row: usize, i: usize) -> f64 {
        self.dists[row * self.width + i - 1]
    }

    /// The same table cut down to the first `width` neighbours per row.
    pub fn truncated(&self, width: usize) -> Result<NeighborTable> {
        if width == 0 || width > self.width {
            return Err(Error::invalid(format!(
                "cannot truncate a table of width {} to {width}",
                self.width
            )));
        }
        let n = self.n_rows();
        let mut ids = Vec::with_capacity(n * width);
        let mut dists = Vec::with_capacity(n * width);
        for r in 0..n {
            ids.extend_from_slice(&self.ids(r)[..width]);
            dists.extend_from_slice(&self.dists(r)[..width]);
        }
        Ok(NeighborTable { width, ids, dists })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Exhaustive oracle: all pairwise distances, sorted by (distance, id).
    fn oracle(
        x: &FeatureMatrix,
        metric: Metric,
        y: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Neighbors {
        let mut all: Vec<(f64, usize)> = Vec::new();
        for i in 0..x.n_rows() {
            if Some(i) == exclude {
                continue;
            }
            all.push((metric.eval(y, x.row(i)), i));
        }
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.truncate(k);
        Neighbors {
            ids: all.iter().map(|a| a.1).collect(),
            dists: all.iter().map(|a| a.0).collect(),
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(Metric::Manhattan, &[0.0, 0.0], &[1.0, 2.0]).unwrap(),
            3.0
        );
        assert_eq!(
            distance(Metric::Euclidean, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            5.0
        );
        assert_eq!(
            distance(Metric::Euclidean, &[1.5, -2.0], &[1.5, -2.0]).unwrap(),
            0.0
        );
        assert!(matches!(
            distance(Metric::Manhattan, &[0.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn query_examples() {
        let x = line(&[0.0, 1.0, 3.0]);
        let idx = build_index(&x, Metric::Manhattan);
        assert_eq!(idx.len(), 3);
        let nb = idx.query(&[4.0], 2, None).unwrap();
        assert_eq!(nb, oracle(&x, Metric::Manhattan, &[4.0], 2, None));
        assert_eq!(nb.ids, vec![2, 1]);
        assert_eq!(nb.dists, vec![1.0, 3.0]);

        let own = idx.query(&[1.0], 1, Some(1)).unwrap();
        assert_eq!(own.ids, vec![0]);

        let all = idx.query(&[4.0], 3, None).unwrap();
        assert_eq!(all.dists, vec![1.0, 3.0, 4.0]);

        let single = build_index(&line(&[7.0]), Metric::Euclidean);
        assert_eq!(single.query(&[-3.0], 1, None).unwrap().ids, vec![0]);
    }

    #[test]
    fn query_rejects_bad_k() {
        let idx = build_index(&line(&[0.0, 1.0, 3.0]), Metric::Manhattan);
        assert!(matches!(
            idx.query(&[0.0], 0, None),
            Err(Error::InvalidArgument(_))
        ));
        assert!(idx.query(&[0.0], 4, None).is_err());
        assert!(idx.query(&[0.0], 3, Some(0)).is_err());
        assert!(matches!(
            idx.query(&[0.0, 1.0], 1, None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn ties_break_by_row_id() {
        let idx = build_index(&line(&[2.0, 0.0, 2.0, 0.0]), Metric::Manhattan);
        let nb = idx.query(&[1.0], 4, None).unwrap();
        assert_eq!(nb.ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn worked_example_profiles() {
        // Rows whose distance profiles reproduce two rows of the ALP worked
        // example: x₂ has neighbours at 1, 1, 2 and y₁ at 4, 5, 6.
        let x = line(&[0.0, 1.0, -1.0, 2.0]);
        let idx = build_index(&x, Metric::Manhattan);
        assert_eq!(
            idx.kth_distance_profile(&[0.0], 3, Some(0)).unwrap(),
            vec![1.0, 1.0, 2.0]
        );
        let y = line(&[4.0, 5.0, 6.0]);
        let idx = build_index(&y, Metric::Manhattan);
        assert_eq!(
            idx.kth_distance_profile(&[0.0], 3, None).unwrap(),
            vec![4.0, 5.0, 6.0]
        );
        let first = idx.query(&[0.0], 1, None).unwrap().dists[0];
        assert_eq!(idx.kth_distance_profile(&[0.0], 1, None).unwrap()[0], first);
    }

    fn data_strategy() -> impl Strategy<Value = (FeatureMatrix, Vec<f64>)> {
        (2usize..25, 1usize..4).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(-20i32..20, n * m),
                prop::collection::vec(-20i32..20, m),
            )
                .prop_map(move |(v, q)| {
                    (
                        FeatureMatrix::from_vec(n, m, v.into_iter().map(f64::from).collect())
                            .unwrap(),
                        q.into_iter().map(f64::from).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search((x, q) in data_strategy(), euclid in any::<bool>(), k_frac in 0.0f64..1.0) {
            let metric = if euclid { Metric::Euclidean } else { Metric::Manhattan };
            let idx = build_index(&x, metric);
            let k = 1 + (k_frac * (x.n_rows() - 1) as f64) as usize;
            prop_assert_eq!(idx.query(&q, k, None).unwrap(), oracle(&x, metric, &q, k, None));
            let k = k.min(x.n_rows() - 1);
            prop_assert_eq!(idx.query(&q, k, Some(0)).unwrap(), oracle(&x, metric, &q, k, Some(0)));
        }

        #[test]
        fn profile_nondecreasing_and_self_excluded((x, _q) in data_strategy()) {
            let idx = build_index(&x, Metric::Manhattan);
            let k = x.n_rows() - 1;
            for i in 0..x.n_rows() {
                let nb = idx.query(x.row(i), k, Some(i)).unwrap();
                prop_assert!(!nb.ids.contains(&i));
                prop_assert!(nb.dists.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
