//! Scores of a fixed query set under many neighbour counts at once.
//!
//! Hyperparameter grids evaluate the same training fold with hundreds of
//! `(k, l)` combinations. Sorting every query's neighbours once, and keeping
//! the training table at its widest, turns each combination into a cheap
//! lookup instead of a fresh fit.

use super::alp::localised_proximity;
use super::lnnd::localised_distance_score;
use super::lof::{local_reachability_densities, lof_value};
use super::require_two_rows;
use crate::error::{Error, Result};
use crate::model::{distance_to_score, FeatureMatrix};
use crate::neighbors::{Metric, NeighborIndex, NeighborTable, Neighbors};
use crate::owa::WeightVector;

pub struct NeighborhoodSweep {
    n_train: usize,
    max_k: usize,
    max_l: usize,
    table: NeighborTable,
    queries: Vec<Neighbors>,
    /// Per query, `Σ_{t≤j} d_i(NN_t)` at `[(i−1)·max_l + (j−1)]`.
    prefix: Vec<Vec<f64>>,
    /// Per query, `Σ_{t≤j} t · d_i(NN_t)`, same layout.
    prefix_weighted: Vec<Vec<f64>>,
}

impl NeighborhoodSweep {
    /// Supports `k ≤ max_k ≤ n − 1` and, for ALP, `l ≤ max_l ≤ n`.
    pub fn new(
        train: &FeatureMatrix,
        queries: &FeatureMatrix,
        metric: Metric,
        max_k: usize,
        max_l: usize,
    ) -> Result<Self> {
        require_two_rows(train, "neighbour sweep")?;
        let n = train.n_rows();
        if max_k == 0 || max_k > n - 1 || max_l == 0 || max_l > n {
            return Err(Error::invalid(format!(
                "sweep widths k ≤ {max_k}, l ≤ {max_l} invalid for n = {n}"
            )));
        }
        if queries.n_cols() != train.n_cols() {
            return Err(Error::shape("query and training attributes differ"));
        }
        let index = NeighborIndex::build(train.clone(), metric);
        let table = index.self_table(max_k)?;
        let width = max_k.max(max_l);
        let queries: Vec<Neighbors> = queries
            .rows()
            .map(|q| index.query(q, width, None))
            .collect::<Result<_>>()?;

        let mut prefix = Vec::with_capacity(queries.len());
        let mut prefix_weighted = Vec::with_capacity(queries.len());
        for nb in &queries {
            let mut p = vec![0.0; max_k * max_l];
            let mut r = vec![0.0; max_k * max_l];
            for i in 0..max_k {
                let (mut acc, mut acc_w) = (0.0, 0.0);
                for j in 0..max_l {
                    let d = table.kth(nb.ids[j], i + 1);
                    acc += d;
                    acc_w += (j + 1) as f64 * d;
                    p[i * max_l + j] = acc;
                    r[i * max_l + j] = acc_w;
                }
            }
            prefix.push(p);
            prefix_weighted.push(r);
        }
        Ok(NeighborhoodSweep {
            n_train: n,
            max_k,
            max_l,
            table,
            queries,
            prefix,
            prefix_weighted,
        })
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.max_k {
            return Err(Error::invalid(format!(
                "k = {k} outside [1, {}]",
                self.max_k
            )));
        }
        Ok(())
    }

    /// NND scores; `k` may go up to `n`, since queries are external.
    pub fn nnd(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.max_k.max(self.max_l) {
            return Err(Error::invalid(format!("k = {k} outside the sweep range")));
        }
        self.queries
            .iter()
            .map(|nb| distance_to_score(nb.dists[k - 1]).map(f64::from))
            .collect()
    }

    pub fn lnnd(&self, k: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        Ok(self
            .queries
            .iter()
            .map(|nb| {
                localised_distance_score(nb.dists[k - 1], self.table.kth(nb.ids[k - 1], k)).value()
            })
            .collect())
    }

    pub fn lof(&self, k: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        let lrd = local_reachability_densities(&self.table, k);
        self.queries
            .iter()
            .map(|nb| {
                distance_to_score(lof_value(&nb.dists, &nb.ids, &self.table, &lrd, k))
                    .map(f64::from)
            })
            .collect()
    }

    /// ALP with linear weights of lengths `k` and `l`.
    pub fn alp(&self, k: usize, l: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        if l == 0 || l > self.max_l {
            return Err(Error::invalid(format!(
                "l = {l} outside [1, {}]",
                self.max_l
            )));
        }
        let w_k = WeightVector::linear(k)?;
        let triangular = (l * (l + 1)) as f64 / 2.0;
        let mut lp = vec![0.0; k];
        Ok(self
            .queries
            .iter()
            .zip(self.prefix.iter().zip(&self.prefix_weighted))
            .map(|(nb, (p, r))| {
                for (i, slot) in lp.iter_mut().enumerate() {
                    let at = i * self.max_l + (l - 1);
                    let local = ((l + 1) as f64 * p[at] - r[at]) / triangular;
                    *slot = localised_proximity(local.max(0.0), nb.dists[i]);
                }
                w_k.apply_in_place(&mut lp).clamp(0.0, 1.0)
            })
            .collect())
    }
}
