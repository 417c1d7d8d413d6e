use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{make_folds, OccTask};
use super::grid::{aggregate_weighted, argmax, rolling_mean, HyperGrid};
use super::protocol::{evaluate_tasks, fold_context, EvalReport, PreparedFold};
use crate::descriptor::{
    fit_hyperparameters, resolve_hyperparameters, Coefficients, DescriptorSetup, Hyperparameters,
};
use crate::error::{Error, Result};
use crate::model::DataDescription;
use crate::neighbors::Metric;
use crate::nn::NeighborhoodSweep;

/// Distinguishes hyperparameter settings of a single descriptor kind.
fn cache_key(hp: &Hyperparameters) -> (u64, u64) {
    match *hp {
        Hyperparameters::Nnd { k } | Hyperparameters::Lnnd { k } | Hyperparameters::Lof { k } => {
            (k as u64, 0)
        }
        Hyperparameters::Alp { k, l } => (k as u64, l as u64),
        Hyperparameters::Svm { nu, width } => (nu.to_bits(), width.to_bits()),
        Hyperparameters::Md | Hyperparameters::If | Hyperparameters::Eif => (0, 0),
    }
}

fn sweep_widths(hps: &[Hyperparameters]) -> Option<(usize, usize)> {
    let mut widths = None;
    for hp in hps {
        let (k, l) = match *hp {
            Hyperparameters::Nnd { k }
            | Hyperparameters::Lnnd { k }
            | Hyperparameters::Lof { k } => (k, 1),
            Hyperparameters::Alp { k, l } => (k, l),
            _ => return None,
        };
        let (mk, ml) = widths.unwrap_or((1, 1));
        widths = Some((k.max(mk), l.max(ml)));
    }
    widths
}

fn fold_surface(
    prepared: &PreparedFold,
    coefficients: &[Coefficients],
    metric: Metric,
    seed: u64,
) -> Result<Vec<f64>> {
    let (n, m) = (prepared.train.n_rows(), prepared.train.n_cols());
    let hps: Vec<Hyperparameters> = coefficients
        .iter()
        .map(|c| resolve_hyperparameters(c, n, m))
        .collect();
    let queries = prepared.queries();
    let sweep = match sweep_widths(&hps) {
        Some((max_k, max_l)) => Some(NeighborhoodSweep::new(
            &prepared.train,
            &queries,
            metric,
            max_k,
            max_l,
        )?),
        None => None,
    };
    let mut cache: HashMap<(u64, u64), f64> = HashMap::new();
    hps.iter()
        .map(|hp| {
            if let Some(&a) = cache.get(&cache_key(hp)) {
                return Ok(a);
            }
            let scores = match (&sweep, *hp) {
                (Some(s), Hyperparameters::Nnd { k }) => s.nnd(k)?,
                (Some(s), Hyperparameters::Lnnd { k }) => s.lnnd(k)?,
                (Some(s), Hyperparameters::Lof { k }) => s.lof(k)?,
                (Some(s), Hyperparameters::Alp { k, l }) => s.alp(k, l)?,
                _ => fit_hyperparameters(hp, metric, seed, &prepared.train)?
                    .score_all(&queries)?
                    .into_iter()
                    .map(f64::from)
                    .collect(),
            };
            let a = prepared.auroc(&scores)?;
            cache.insert(cache_key(hp), a);
            Ok(a)
        })
        .collect()
}

/// Mean fold AUROC of one task at every grid point. Neighbour searches are
/// shared across all points of a fold.
pub fn task_surface(
    task: &OccTask,
    grid: &HyperGrid,
    metric: Metric,
    seed: u64,
) -> Result<Vec<f64>> {
    let plan = make_folds(task, seed)?;
    let coefficients = grid.coefficients();
    let mut total = vec![0.0; coefficients.len()];
    for (f, fold) in plan.folds.iter().enumerate() {
        let surface = PreparedFold::new(task, fold)
            .and_then(|p| fold_surface(&p, &coefficients, metric, seed))
            .map_err(|e| e.context(fold_context(task, f)))?;
        for (t, s) in total.iter_mut().zip(surface) {
            *t += s;
        }
    }
    let folds = plan.folds.len() as f64;
    Ok(total.into_iter().map(|t| t / folds).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub grid: HyperGrid,
    /// Dataset-weighted mean AUROC per grid point, row-major.
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub best_index: usize,
    pub best_point: Vec<f64>,
    pub best: Coefficients,
    pub best_smoothed: f64,
}

/// Aggregates per-task surfaces, smooths, and picks the best point.
pub fn select_coefficients<S: AsRef<[f64]>>(
    grid: &HyperGrid,
    surfaces: &[S],
    datasets: &[&str],
) -> Result<GridSearch> {
    if surfaces.is_empty() {
        return Err(Error::invalid("grid search over no tasks"));
    }
    let len = grid.len();
    if let Some(bad) = surfaces.iter().find(|s| s.as_ref().len() != len) {
        return Err(Error::shape(format!(
            "task surface of {} points on a grid of {len}",
            bad.as_ref().len()
        )));
    }
    let raw: Vec<f64> = (0..len)
        .map(|p| {
            let column: Vec<f64> = surfaces.iter().map(|s| s.as_ref()[p]).collect();
            aggregate_weighted(&column, datasets)
        })
        .collect::<Result<_>>()?;
    let smoothed = rolling_mean(&raw, &grid.shape(), &grid.windows())?;
    let best_index =
        argmax(&smoothed).ok_or_else(|| Error::invalid("surface has no finite value"))?;
    let best_point = grid.points().swap_remove(best_index);
    Ok(GridSearch {
        best: Coefficients::from_point(grid.kind, &best_point)?,
        best_smoothed: smoothed[best_index],
        best_point,
        best_index,
        grid: grid.clone(),
        raw,
        smoothed,
    })
}

/// [`task_surface`] for every task, in task order.
pub fn task_surfaces(
    tasks: &[OccTask],
    grid: &HyperGrid,
    metric: Metric,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    tasks
        .par_iter()
        .map(|t| task_surface(t, grid, metric, seed))
        .collect()
}

/// Smoothed dataset-weighted AUROC surface over `grid` and its maximiser.
pub fn grid_search(
    tasks: &[OccTask],
    grid: &HyperGrid,
    metric: Metric,
    seed: u64,
) -> Result<GridSearch> {
    let surfaces = task_surfaces(tasks, grid, metric, seed)?;
    let ids: Vec<&str> = tasks.iter().map(OccTask::dataset).collect();
    select_coefficients(grid, &surfaces, &ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodoChoice {
    pub held_out: String,
    pub coefficients: Coefficients,
    pub point: Vec<f64>,
    /// Smoothed AUROC of the choice on the remaining datasets.
    pub selection_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodoReport {
    pub choices: Vec<LodoChoice>,
    /// Held-out performance of each dataset at its own choice.
    pub report: EvalReport,
}

/// For each dataset, tunes on all others and evaluates on it. Task surfaces
/// are computed once and reused across rounds.
pub fn leave_one_dataset_out(
    tasks: &[OccTask],
    grid: &HyperGrid,
    metric: Metric,
    seed: u64,
) -> Result<LodoReport> {
    let surfaces = task_surfaces(tasks, grid, metric, seed)?;
    leave_one_dataset_out_with(tasks, &surfaces, grid, metric, seed)
}

/// As [`leave_one_dataset_out`], given surfaces from [`task_surfaces`].
pub fn leave_one_dataset_out_with(
    tasks: &[OccTask],
    surfaces: &[Vec<f64>],
    grid: &HyperGrid,
    metric: Metric,
    seed: u64,
) -> Result<LodoReport> {
    if surfaces.len() != tasks.len() {
        return Err(Error::shape(format!(
            "{} surfaces for {} tasks",
            surfaces.len(),
            tasks.len()
        )));
    }
    let mut datasets: Vec<&str> = Vec::new();
    for t in tasks {
        if !datasets.contains(&t.dataset()) {
            datasets.push(t.dataset());
        }
    }
    if datasets.len() < 2 {
        return Err(Error::invalid(format!(
            "leave-one-dataset-out needs at least 2 datasets, got {}",
            datasets.len()
        )));
    }

    let mut choices = Vec::with_capacity(datasets.len());
    let mut sections = Vec::with_capacity(datasets.len());
    for held_out in datasets {
        let (rest, ids): (Vec<&[f64]>, Vec<&str>) = tasks
            .iter()
            .zip(surfaces)
            .filter(|(t, _)| t.dataset() != held_out)
            .map(|(t, s)| (s.as_slice(), t.dataset()))
            .unzip();
        let search = select_coefficients(grid, &rest, &ids)
            .map_err(|e| e.context(format!("tuning without dataset {held_out:?}")))?;
        let setup = DescriptorSetup {
            coefficients: search.best,
            metric,
            seed,
        };
        let own: Vec<OccTask> = tasks
            .iter()
            .filter(|t| t.dataset() == held_out)
            .cloned()
            .collect();
        sections.push((search.best, evaluate_tasks(&setup, &own, seed)?));
        choices.push(LodoChoice {
            held_out: held_out.to_string(),
            coefficients: search.best,
            point: search.best_point,
            selection_auroc: search.best_smoothed,
        });
    }
    Ok(LodoReport {
        choices,
        report: EvalReport::assemble(grid.kind, metric, seed, sections)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::DescriptorKind;
    use crate::evaluation::grid::GridAxis;
    use crate::evaluation::protocol::evaluate_task;
    use crate::model::FeatureMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob_task(dataset: &str, seed: u64, n: usize) -> OccTask {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = |n: usize, c: f64| {
            let v: Vec<f64> = (0..n * 2)
                .map(|_| c + rng.random_range(-1.0..1.0))
                .collect();
            FeatureMatrix::from_vec(n, 2, v).unwrap()
        };
        let targets = sample(n, 0.0);
        let others = sample(n, 1.2);
        OccTask::new(dataset, "t", targets, others).unwrap()
    }

    #[test]
    fn surface_matches_direct_evaluation() {
        let task = blob_task("d", 1, 30);
        for kind in [
            DescriptorKind::Nnd,
            DescriptorKind::Lnnd,
            DescriptorKind::Lof,
            DescriptorKind::Alp,
            DescriptorKind::Svm,
        ] {
            let grid = match kind {
                DescriptorKind::Alp => HyperGrid::with_axes(
                    kind,
                    vec![
                        GridAxis::new("a", 0.5, 3.5, 1.0, 1).unwrap(),
                        GridAxis::new("b", 0.5, 4.5, 2.0, 1).unwrap(),
                    ],
                )
                .unwrap(),
                DescriptorKind::Svm => HyperGrid::with_axes(
                    kind,
                    vec![
                        GridAxis::new("nu", 0.1, 0.5, 0.4, 1).unwrap(),
                        GridAxis::new("c", 0.5, 1.0, 0.5, 1).unwrap(),
                    ],
                )
                .unwrap(),
                DescriptorKind::Nnd => HyperGrid::for_kind(kind),
                _ => {
                    HyperGrid::with_axes(kind, vec![GridAxis::new("a", 0.5, 6.0, 0.5, 1).unwrap()])
                        .unwrap()
                }
            };
            let surface = task_surface(&task, &grid, Metric::Manhattan, 3).unwrap();
            let plan = make_folds(&task, 3).unwrap();
            for (coefs, value) in grid.coefficients().into_iter().zip(&surface) {
                let setup = DescriptorSetup {
                    coefficients: coefs,
                    metric: Metric::Manhattan,
                    seed: 3,
                };
                let direct = evaluate_task(&setup, &task, &plan).unwrap().mean_auroc;
                assert!(
                    (direct - value).abs() < 1e-9,
                    "{kind} at {coefs:?}: {direct} vs {value}"
                );
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let task = blob_task("d", 2, 12);
        let grid = HyperGrid::for_kind(DescriptorKind::Md);
        let search = grid_search(&[task], &grid, Metric::Manhattan, 0).unwrap();
        assert_eq!(search.raw.len(), 1);
        assert_eq!(search.best, Coefficients::Md);
        assert_eq!(search.raw, search.smoothed);
    }

    #[test]
    fn toy_surface_selection() {
        let grid = HyperGrid::with_axes(
            DescriptorKind::Lnnd,
            vec![GridAxis::new("a", 1.0, 3.0, 1.0, 3).unwrap()],
        )
        .unwrap();
        let search = select_coefficients(&grid, &[vec![0.6, 0.9, 0.7]], &["d"]).unwrap();
        assert_eq!(search.best_index, 2);
        assert_eq!(search.best, Coefficients::Lnnd { k_coef: 3.0 });
    }

    #[test]
    fn lodo_ignores_the_held_out_dataset() {
        let grid = HyperGrid::with_axes(
            DescriptorKind::Lnnd,
            vec![GridAxis::new("a", 1.0, 3.0, 1.0, 1).unwrap()],
        )
        .unwrap();
        // Dataset C alone would favour the first point; A and B the last.
        let surfaces = [
            vec![0.5, 0.6, 0.7],
            vec![0.5, 0.6, 0.7],
            vec![1.0, 0.0, 0.0],
        ];
        let ids = ["A", "B", "C"];
        let without_c = select_coefficients(&grid, &surfaces[..2], &ids[..2]).unwrap();
        assert_eq!(without_c.best_index, 2);
        let without_a = select_coefficients(&grid, &surfaces[1..], &ids[1..]).unwrap();
        assert_eq!(without_a.best_index, 0);
    }

    #[test]
    fn lodo_mirrored_datasets_agree() {
        let a = blob_task("A", 5, 20);
        let mut b = a.clone();
        b = OccTask::new(
            "B",
            b.target_label(),
            b.targets().clone(),
            b.others().clone(),
        )
        .unwrap();
        let grid = HyperGrid::for_kind(DescriptorKind::Nnd);
        let report = leave_one_dataset_out(&[a.clone(), b], &grid, Metric::Manhattan, 9).unwrap();
        assert_eq!(report.choices.len(), 2);
        assert_eq!(
            report.choices[0].coefficients,
            report.choices[1].coefficients
        );
        assert_eq!(
            report.report.datasets[0].mean_auroc,
            report.report.datasets[1].mean_auroc
        );
        assert!(leave_one_dataset_out(&[a], &grid, Metric::Manhattan, 9).is_err());
    }
}
