//! Isolation Forest and Extended Isolation Forest.
//!
//! Tree `i` draws from its own ChaCha8 stream seeded with `seed ^ i`, so a
//! forest is reproducible regardless of how trees are scheduled.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_query, DataDescription, DataDescriptor, FeatureMatrix, Score};

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_MAX_SUBSAMPLE: usize = 256;
/// Name of the per-tree random generator, recorded in reports.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), tree i seeded with seed ^ i";

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;
const EXACT_HARMONIC_LIMIT: usize = 10_000;
/// Attempts at a hyperplane that leaves both sides non-empty.
const MAX_HYPERPLANE_DRAWS: usize = 64;

fn harmonic(j: usize) -> f64 {
    if j <= EXACT_HARMONIC_LIMIT {
        (1..=j).map(|i| 1.0 / i as f64).sum()
    } else {
        let x = j as f64;
        x.ln() + EULER_MASCHERONI + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Average path length of an unsuccessful search among `i` instances:
/// `c(i) = 2 H_{i−1} − 2 (i − 1) / i`, with `c(1) = 0`.
pub fn expected_path_length(i: usize) -> Result<f64> {
    match i {
        0 => Err(Error::invalid("expected path length needs i ≥ 1")),
        1 => Ok(0.0),
        _ => Ok(2.0 * harmonic(i - 1) - 2.0 * (i - 1) as f64 / i as f64),
    }
}

/// `1 − 2^(−mean_path / c(ψ))`.
pub fn isolation_score(mean_path: f64, subsample: usize) -> Result<Score> {
    let c = expected_path_length(subsample)?;
    if c == 0.0 {
        return Err(Error::invalid("subsample size must be at least 2"));
    }
    Ok(Score::clamped(1.0 - (-mean_path / c).exp2()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMode {
    /// A random attribute and threshold.
    Axis,
    /// A random hyperplane with Gaussian normal.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        size: usize,
    },
    Axis {
        attribute: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Hyperplane {
        normal: Vec<f64>,
        offset: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    nodes: Vec<Node>,
}

struct TreeBuilder<'a> {
    data: &'a FeatureMatrix,
    mode: SplitMode,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= self.max_depth || rows.len() <= 1 {
            return slot;
        }
        let split = match self.mode {
            SplitMode::Axis => self.axis_split(&rows, rng),
            SplitMode::Extended => self.hyperplane_split(&rows, rng),
        };
        let Some((node, left_rows, right_rows)) = split else {
            return slot;
        };
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[slot] = match node {
            Node::Axis {
                attribute,
                threshold,
                ..
            } => Node::Axis {
                attribute,
                threshold,
                left,
                right,
            },
            Node::Hyperplane { normal, offset, .. } => Node::Hyperplane {
                normal,
                offset,
                left,
                right,
            },
            Node::Leaf { .. } => unreachable!(),
        };
        slot
    }

    fn ranges(&self, rows: &[usize]) -> Vec<(f64, f64)> {
        let m = self.data.n_cols();
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); m];
        for &r in rows {
            for (range, &v) in ranges.iter_mut().zip(self.data.row(r)) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        ranges
    }

    fn axis_split(
        &self,
        rows: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(Node, Vec<usize>, Vec<usize>)> {
        let ranges = self.ranges(rows);
        let splittable: Vec<usize> = (0..ranges.len())
            .filter(|&j| ranges[j].1 > ranges[j].0)
            .collect();
        if splittable.is_empty() {
            return None;
        }
        let attribute = splittable[rng.random_range(0..splittable.len())];
        let (lo, hi) = ranges[attribute];
        let threshold = loop {
            let t = rng.random_range(lo..hi);
            if t > lo {
                break t;
            }
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.row(r)[attribute] < threshold);
        Some((
            Node::Axis {
                attribute,
                threshold,
                left: 0,
                right: 0,
            },
            left,
            right,
        ))
    }

    fn hyperplane_split(
        &self,
        rows: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(Node, Vec<usize>, Vec<usize>)> {
        let ranges = self.ranges(rows);
        if ranges.iter().all(|(lo, hi)| hi <= lo) {
            return None;
        }
        for _ in 0..MAX_HYPERPLANE_DRAWS {
            let normal: Vec<f64> = (0..ranges.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let offset: f64 = ranges
                .iter()
                .zip(&normal)
                .map(|(&(lo, hi), w)| {
                    let p = if hi > lo {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    };
                    w * p
                })
                .sum();
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| dot(&normal, self.data.row(r)) < offset);
            if !left.is_empty() && !right.is_empty() {
                return Some((
                    Node::Hyperplane {
                        normal,
                        offset,
                        left: 0,
                        right: 0,
                    },
                    left,
                    right,
                ));
            }
        }
        None
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl IsolationTree {
    fn grow(data: &FeatureMatrix, rows: Vec<usize>, mode: SplitMode, rng: &mut ChaCha8Rng) -> Self {
        let max_depth = (rows.len() as f64).log2().ceil() as usize;
        let mut builder = TreeBuilder {
            data,
            mode,
            max_depth,
            nodes: Vec::new(),
        };
        builder.build(rows, 0, rng);
        IsolationTree {
            nodes: builder.nodes,
        }
    }

    /// `h_T(y)`: edges traversed plus `c(j)` for the `j` instances left in the leaf.
    pub fn path_length(&self, query: &[f64]) -> f64 {
        let mut at = 0;
        let mut depth = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { size } => {
                    return depth as f64 + expected_path_length(*size).unwrap_or(0.0);
                }
                Node::Axis {
                    attribute,
                    threshold,
                    left,
                    right,
                } => {
                    at = if query[*attribute] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Hyperplane {
                    normal,
                    offset,
                    left,
                    right,
                } => {
                    at = if dot(normal, query) < *offset {
                        *left
                    } else {
                        *right
                    };
                }
            }
            depth += 1;
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Axis { left, right, .. } | Node::Hyperplane { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { size } => Some(*size),
                _ => None,
            })
            .collect()
    }
}

/// Forest hyperparameters. `subsample = None` means `min(256, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub trees: usize,
    pub subsample: Option<usize>,
    pub mode: SplitMode,
    pub seed: u64,
}

impl IsolationForest {
    pub fn new(mode: SplitMode, seed: u64) -> Self {
        IsolationForest {
            trees: DEFAULT_TREES,
            subsample: None,
            mode,
            seed,
        }
    }
}

impl DataDescriptor for IsolationForest {
    type Description = IsolationForestModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<IsolationForestModel> {
        IsolationForestModel::fit(train, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    trees: Vec<IsolationTree>,
    subsample: usize,
    mode: SplitMode,
    seed: u64,
    dim: usize,
}

impl IsolationForestModel {
    pub fn fit(x: &FeatureMatrix, params: &IsolationForest) -> Result<Self> {
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::insufficient(format!(
                "isolation forest needs at least 2 rows, got {n}"
            )));
        }
        if params.trees == 0 {
            return Err(Error::invalid("forest needs at least one tree"));
        }
        let subsample = params.subsample.unwrap_or(DEFAULT_MAX_SUBSAMPLE.min(n));
        if !(2..=n).contains(&subsample) {
            return Err(Error::invalid(format!(
                "subsample size {subsample} outside [2, {n}]"
            )));
        }
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ i as u64);
                let rows = index::sample(&mut rng, n, subsample).into_vec();
                IsolationTree::grow(x, rows, params.mode, &mut rng)
            })
            .collect();
        Ok(IsolationForestModel {
            trees,
            subsample,
            mode: params.mode,
            seed: params.seed,
            dim: x.n_cols(),
        })
    }

    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean of `h_T(y)` over all trees.
    pub fn mean_path_length(&self, query: &[f64]) -> Result<f64> {
        check_query(self.dim, query)?;
        Ok(self.trees.iter().map(|t| t.path_length(query)).sum::<f64>() / self.trees.len() as f64)
    }
}

impl DataDescription for IsolationForestModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        isolation_score(self.mean_path_length(query)?, self.subsample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_line(n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::from_vec(n, 1, (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn expected_path_length_examples() {
        assert_eq!(expected_path_length(1).unwrap(), 0.0);
        assert_eq!(expected_path_length(2).unwrap(), 1.0);
        assert!((expected_path_length(3).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!(expected_path_length(0).is_err());
    }

    #[test]
    fn harmonic_approximation_is_continuous() {
        let exact: f64 = (1..=EXACT_HARMONIC_LIMIT + 1).map(|i| 1.0 / i as f64).sum();
        assert!((harmonic(EXACT_HARMONIC_LIMIT + 1) - exact).abs() < 1e-12);
    }

    #[test]
    fn defaults() {
        let x = uniform_line(1000, 1);
        let m = IsolationForest::new(SplitMode::Axis, 0).fit(&x).unwrap();
        assert_eq!((m.trees().len(), m.subsample()), (100, 256));
        let x = uniform_line(100, 1);
        let m = IsolationForest::new(SplitMode::Axis, 0).fit(&x).unwrap();
        assert_eq!(m.subsample(), 100);
        let one = uniform_line(1, 1);
        assert!(matches!(
            IsolationForest::new(SplitMode::Axis, 0).fit(&one),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn seeded_forests_are_identical() {
        let x = uniform_line(300, 2);
        for mode in [SplitMode::Axis, SplitMode::Extended] {
            let a = IsolationForest::new(mode, 42).fit(&x).unwrap();
            let b = IsolationForest::new(mode, 42).fit(&x).unwrap();
            assert_eq!(a, b);
            let c = IsolationForest::new(mode, 43).fit(&x).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn constant_data_scores_one_half() {
        let x = FeatureMatrix::from_vec(16, 2, vec![3.0; 32]).unwrap();
        for mode in [SplitMode::Axis, SplitMode::Extended] {
            let m = IsolationForest {
                trees: 1,
                subsample: None,
                mode,
                seed: 9,
            }
            .fit(&x)
            .unwrap();
            assert_eq!(m.trees()[0].leaf_sizes(), vec![16]);
            for y in [[3.0, 3.0], [-50.0, 8.0]] {
                assert!((m.score(&y).unwrap().value() - 0.5).abs() < 1e-15);
            }
        }
        assert_eq!(
            isolation_score(expected_path_length(256).unwrap(), 256)
                .unwrap()
                .value(),
            0.5
        );
    }

    #[test]
    fn structure_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = FeatureMatrix::from_vec(
            500,
            3,
            (0..1500).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        for mode in [SplitMode::Axis, SplitMode::Extended] {
            let m = IsolationForest {
                trees: 50,
                subsample: Some(100),
                mode,
                seed: 1,
            }
            .fit(&x)
            .unwrap();
            let limit = (100f64).log2().ceil() as usize;
            for t in m.trees() {
                assert!(t.depth() <= limit);
                let sizes = t.leaf_sizes();
                assert!(sizes.iter().all(|&s| s >= 1));
                assert_eq!(sizes.iter().sum::<usize>(), 100);
            }
        }
    }

    #[test]
    fn far_points_score_lower() {
        let x = uniform_line(512, 5);
        for mode in [SplitMode::Axis, SplitMode::Extended] {
            let m = IsolationForest::new(mode, 17).fit(&x).unwrap();
            let near = m.score(&[0.5]).unwrap().value();
            let far = m.score(&[100.0]).unwrap().value();
            assert!(far < near, "{mode:?}: far {far} ≥ near {near}");
            assert!(far > 0.0 && near < 1.0);
        }
    }
}
