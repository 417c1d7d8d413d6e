use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

pub const FOLDS: usize = 5;
pub const MIN_TARGETS: usize = 2 * FOLDS;

/// One target class of a dataset against the union of all other classes.
#[derive(Debug, Clone, PartialEq)]
pub struct OccTask {
    dataset: String,
    target_label: String,
    targets: FeatureMatrix,
    others: FeatureMatrix,
}

impl OccTask {
    pub fn new(
        dataset: impl Into<String>,
        target_label: impl Into<String>,
        targets: FeatureMatrix,
        others: FeatureMatrix,
    ) -> Result<Self> {
        let target_label = target_label.into();
        if targets.n_cols() != others.n_cols() {
            return Err(Error::shape(format!(
                "target rows have {} attributes, other rows {}",
                targets.n_cols(),
                others.n_cols()
            )));
        }
        if targets.n_rows() < MIN_TARGETS {
            return Err(Error::insufficient(format!(
                "class {target_label:?} has {} rows, at least {MIN_TARGETS} needed",
                targets.n_rows()
            )));
        }
        if others.n_rows() < FOLDS {
            return Err(Error::insufficient(format!(
                "only {} rows outside class {target_label:?}, at least {FOLDS} needed",
                others.n_rows()
            )));
        }
        Ok(OccTask {
            dataset: dataset.into(),
            target_label,
            targets,
            others,
        })
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    pub fn targets(&self) -> &FeatureMatrix {
        &self.targets
    }

    pub fn others(&self) -> &FeatureMatrix {
        &self.others
    }
}

/// A class that was too small to form a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedClass {
    pub dataset: String,
    pub label: String,
    pub reason: String,
}

/// One task per distinct label, in order of first appearance.
pub fn one_vs_rest_tasks(
    dataset: &str,
    x: &FeatureMatrix,
    labels: &[String],
) -> Result<(Vec<OccTask>, Vec<SkippedClass>)> {
    if labels.len() != x.n_rows() {
        return Err(Error::shape(format!(
            "{} labels for {} rows",
            labels.len(),
            x.n_rows()
        )));
    }
    let mut distinct: Vec<&String> = Vec::new();
    for label in labels {
        if !distinct.contains(&label) {
            distinct.push(label);
        }
    }
    let mut tasks = Vec::new();
    let mut skipped = Vec::new();
    for label in distinct {
        let (target_ids, other_ids): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| &labels[i] == label);
        let built = if other_ids.is_empty() {
            Err(Error::insufficient("no rows outside this class"))
        } else {
            OccTask::new(
                dataset,
                label.as_str(),
                x.select_rows(&target_ids)?,
                x.select_rows(&other_ids)?,
            )
        };
        match built {
            Ok(task) => tasks.push(task),
            Err(e @ Error::InsufficientData(_)) => skipped.push(SkippedClass {
                dataset: dataset.to_string(),
                label: label.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((tasks, skipped))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub target_train: Vec<usize>,
    pub target_test: Vec<usize>,
    pub other_test: Vec<usize>,
}

/// Stratified folds. Other-class rows only ever appear in test sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

fn round_robin(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut buckets = vec![Vec::new(); FOLDS];
    for (pos, id) in ids.into_iter().enumerate() {
        buckets[pos % FOLDS].push(id);
    }
    for b in &mut buckets {
        b.sort_unstable();
    }
    buckets
}

pub fn make_folds(task: &OccTask, seed: u64) -> Result<FoldPlan> {
    let n_targets = task.targets.n_rows();
    if n_targets < MIN_TARGETS {
        return Err(Error::insufficient(format!(
            "{n_targets} target rows, at least {MIN_TARGETS} needed"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_buckets = round_robin(n_targets, &mut rng);
    let other_buckets = round_robin(task.others.n_rows(), &mut rng);
    let folds = (0..FOLDS)
        .map(|f| Fold {
            target_train: (0..FOLDS)
                .filter(|&g| g != f)
                .flat_map(|g| target_buckets[g].iter().copied())
                .collect(),
            target_test: target_buckets[f].clone(),
            other_test: other_buckets[f].clone(),
        })
        .collect();
    Ok(FoldPlan { seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(n: usize, offset: f64) -> FeatureMatrix {
        FeatureMatrix::from_vec(n, 1, (0..n).map(|i| i as f64 + offset).collect()).unwrap()
    }

    #[test]
    fn ten_targets_five_others() {
        let task = OccTask::new("d", "a", column(10, 0.0), column(5, 100.0)).unwrap();
        let plan = make_folds(&task, 7).unwrap();
        assert_eq!(plan.folds.len(), FOLDS);
        for fold in &plan.folds {
            assert_eq!(fold.target_test.len(), 2);
            assert_eq!(fold.target_train.len(), 8);
            assert_eq!(fold.other_test.len(), 1);
        }
        assert_eq!(plan, make_folds(&task, 7).unwrap());
    }

    #[test]
    fn folds_partition_both_classes() {
        let task = OccTask::new("d", "a", column(23, 0.0), column(17, 100.0)).unwrap();
        let plan = make_folds(&task, 3).unwrap();
        let mut targets: Vec<usize> = plan
            .folds
            .iter()
            .flat_map(|f| f.target_test.clone())
            .collect();
        let mut others: Vec<usize> = plan
            .folds
            .iter()
            .flat_map(|f| f.other_test.clone())
            .collect();
        targets.sort_unstable();
        others.sort_unstable();
        assert_eq!(targets, (0..23).collect::<Vec<_>>());
        assert_eq!(others, (0..17).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.target_test.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for fold in &plan.folds {
            assert!(fold
                .target_train
                .iter()
                .all(|id| !fold.target_test.contains(id)));
        }
    }

    #[test]
    fn small_classes_are_rejected() {
        let err = OccTask::new("d", "a", column(9, 0.0), column(5, 100.0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn one_vs_rest_skips_small_classes() {
        let x = column(25, 0.0);
        let labels: Vec<String> = (0..25)
            .map(|i| match i {
                0..=11 => "a",
                12..=22 => "b",
                _ => "c",
            })
            .map(String::from)
            .collect();
        let (tasks, skipped) = one_vs_rest_tasks("d", &x, &labels).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].targets().n_rows(), 12);
        assert_eq!(tasks[0].others().n_rows(), 13);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].label, "c");
    }
}
