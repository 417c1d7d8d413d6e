use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auroc::auroc;
use super::folds::{make_folds, Fold, FoldPlan, OccTask, FOLDS};
use super::grid::aggregate_weighted;
use crate::descriptor::{Coefficients, DescriptorKind, DescriptorSetup, Hyperparameters};
use crate::error::Result;
use crate::isolation::{DEFAULT_MAX_SUBSAMPLE, DEFAULT_TREES, RNG_NAME};
use crate::model::{DataDescription, FeatureMatrix};
use crate::neighbors::Metric;
use crate::preprocessing::IqrScaler;
use crate::svm::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};

/// A fold's rows, rescaled by the IQR of its target-class training rows.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub scaler: IqrScaler,
    pub train: FeatureMatrix,
    pub target_test: FeatureMatrix,
    pub other_test: FeatureMatrix,
}

impl PreparedFold {
    pub fn new(task: &OccTask, fold: &Fold) -> Result<Self> {
        let raw_train = task.targets().select_rows(&fold.target_train)?;
        let scaler = IqrScaler::fit(&raw_train);
        Ok(PreparedFold {
            train: scaler.apply(&raw_train)?,
            target_test: scaler.apply(&task.targets().select_rows(&fold.target_test)?)?,
            other_test: scaler.apply(&task.others().select_rows(&fold.other_test)?)?,
            scaler,
        })
    }

    /// Target-test rows followed by other-test rows.
    pub fn queries(&self) -> FeatureMatrix {
        let mut values = self.target_test.as_slice().to_vec();
        values.extend_from_slice(self.other_test.as_slice());
        let rows = self.target_test.n_rows() + self.other_test.n_rows();
        FeatureMatrix::from_vec(rows, self.train.n_cols(), values)
            .expect("test rows share attributes")
    }

    /// AUROC of scores laid out as by [`queries`](Self::queries).
    pub fn auroc(&self, scores: &[f64]) -> Result<f64> {
        let (t, o) = scores.split_at(self.target_test.n_rows());
        auroc(t, o)
    }
}

pub fn fold_context(task: &OccTask, fold: usize) -> String {
    format!(
        "dataset {:?}, class {:?}, fold {}",
        task.dataset(),
        task.target_label(),
        fold + 1
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub dataset: String,
    pub target_label: String,
    pub n_targets: usize,
    pub n_others: usize,
    pub fold_seed: u64,
    pub fold_hyperparameters: Vec<Hyperparameters>,
    pub fold_aurocs: Vec<f64>,
    pub mean_auroc: f64,
    /// Sample standard deviation of the fold AUROCs.
    pub sd_auroc: f64,
}

/// Mean and sample standard deviation.
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Cross-validated AUROC of one descriptor on one task. Only the target
/// training rows of each fold reach the scaler and the descriptor.
pub fn evaluate_task(
    setup: &DescriptorSetup,
    task: &OccTask,
    plan: &FoldPlan,
) -> Result<TaskReport> {
    let mut aurocs = Vec::with_capacity(FOLDS);
    let mut hyperparameters = Vec::with_capacity(FOLDS);
    for (f, fold) in plan.folds.iter().enumerate() {
        let run = || -> Result<(f64, Hyperparameters)> {
            let prepared = PreparedFold::new(task, fold)?;
            let model = setup.fit(&prepared.train)?;
            let scores: Vec<f64> = model
                .score_all(&prepared.queries())?
                .into_iter()
                .map(f64::from)
                .collect();
            let hp = setup.resolve(prepared.train.n_rows(), prepared.train.n_cols());
            Ok((prepared.auroc(&scores)?, hp))
        };
        let (a, hp) = run().map_err(|e| e.context(fold_context(task, f)))?;
        aurocs.push(a);
        hyperparameters.push(hp);
    }
    let (mean, sd) = mean_and_sd(&aurocs);
    Ok(TaskReport {
        dataset: task.dataset().to_string(),
        target_label: task.target_label().to_string(),
        n_targets: task.targets().n_rows(),
        n_others: task.others().n_rows(),
        fold_seed: plan.seed,
        fold_hyperparameters: hyperparameters,
        fold_aurocs: aurocs,
        mean_auroc: mean,
        sd_auroc: sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub coefficients: Coefficients,
    /// Mean of the class means.
    pub mean_auroc: f64,
    pub classes: Vec<TaskReport>,
}

/// Settings that affect results but are not hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftwareConstants {
    pub version: String,
    pub folds: usize,
    pub svm_tolerance: f64,
    pub svm_max_iterations: usize,
    pub isolation_trees: usize,
    pub isolation_max_subsample: usize,
    pub rng: String,
}

impl Default for SoftwareConstants {
    fn default() -> Self {
        SoftwareConstants {
            version: env!("CARGO_PKG_VERSION").to_string(),
            folds: FOLDS,
            svm_tolerance: DEFAULT_TOLERANCE,
            svm_max_iterations: DEFAULT_MAX_ITERATIONS,
            isolation_trees: DEFAULT_TREES,
            isolation_max_subsample: DEFAULT_MAX_SUBSAMPLE,
            rng: RNG_NAME.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub descriptor: DescriptorKind,
    pub metric: Metric,
    pub seed: u64,
    /// Mean over datasets of the per-dataset means.
    pub mean_auroc: f64,
    pub datasets: Vec<DatasetReport>,
    pub constants: SoftwareConstants,
}

impl EvalReport {
    /// Groups task reports by dataset, keeping first-appearance order.
    pub fn assemble(
        descriptor: DescriptorKind,
        metric: Metric,
        seed: u64,
        datasets: Vec<(Coefficients, Vec<TaskReport>)>,
    ) -> Result<Self> {
        let mut grouped: Vec<DatasetReport> = Vec::new();
        for (coefficients, tasks) in datasets {
            for t in tasks {
                match grouped
                    .iter_mut()
                    .find(|d| d.dataset == t.dataset && d.coefficients == coefficients)
                {
                    Some(d) => d.classes.push(t),
                    None => grouped.push(DatasetReport {
                        dataset: t.dataset.clone(),
                        coefficients,
                        mean_auroc: 0.0,
                        classes: vec![t],
                    }),
                }
            }
        }
        let mut means = Vec::new();
        let mut ids = Vec::new();
        for d in &mut grouped {
            let class_means: Vec<f64> = d.classes.iter().map(|c| c.mean_auroc).collect();
            d.mean_auroc = aggregate_weighted(&class_means, &vec![0u8; class_means.len()])?;
            means.extend(class_means);
            ids.extend(std::iter::repeat_n(d.dataset.clone(), d.classes.len()));
        }
        Ok(EvalReport {
            descriptor,
            metric,
            seed,
            mean_auroc: aggregate_weighted(&means, &ids)?,
            datasets: grouped,
            constants: SoftwareConstants::default(),
        })
    }
}

/// Evaluates one descriptor setting on every task with folds drawn from `seed`.
pub fn evaluate(setup: &DescriptorSetup, tasks: &[OccTask], seed: u64) -> Result<EvalReport> {
    let reports = evaluate_tasks(setup, tasks, seed)?;
    EvalReport::assemble(
        setup.kind(),
        setup.metric,
        seed,
        vec![(setup.coefficients, reports)],
    )
}

pub(crate) fn evaluate_tasks(
    setup: &DescriptorSetup,
    tasks: &[OccTask],
    seed: u64,
) -> Result<Vec<TaskReport>> {
    tasks
        .par_iter()
        .map(|task| evaluate_task(setup, task, &make_folds(task, seed)?))
        .collect()
}
