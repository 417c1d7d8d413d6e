//! The benchmarking protocol: AUROC, stratified cross-validation with
//! per-fold IQR scaling, hyperparameter grids with rolling-mean smoothing,
//! and leave-one-dataset-out selection of default values.

mod auroc;
mod folds;
mod grid;
mod protocol;
mod search;

pub use auroc::auroc;
pub use folds::{
    make_folds, one_vs_rest_tasks, Fold, FoldPlan, OccTask, SkippedClass, FOLDS, MIN_TARGETS,
};
pub use grid::{aggregate_weighted, argmax, rolling_mean, GridAxis, HyperGrid};
pub use protocol::{
    evaluate, evaluate_task, mean_and_sd, DatasetReport, EvalReport, PreparedFold,
    SoftwareConstants, TaskReport,
};
pub use search::{
    grid_search, leave_one_dataset_out, leave_one_dataset_out_with, select_coefficients,
    task_surface, task_surfaces, GridSearch, LodoChoice, LodoReport,
};
