use occkit::descriptor::{DescriptorKind, DescriptorSetup};
use occkit::evaluation::{
    evaluate, leave_one_dataset_out_with, one_vs_rest_tasks, select_coefficients, task_surfaces,
    EvalReport, GridAxis, GridSearch, HyperGrid, LodoReport, OccTask, SkippedClass,
};
use occkit::{DataDescription, IqrScaler, Metric};
use serde::Serialize;

use crate::cli::{EvalArgs, FitArgs, ScoreArgs, TuneArgs, TuneMode};
use crate::data::{read_table, write_output, write_scores, Fingerprint, Table};
use crate::error::{CliError, CliResult};
use crate::model_file::{self, SavedModel};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let kind = args.common.descriptor.single()?;
    let coefficients = args.coefficients.resolve(kind, &[kind])?;
    let table = read_table(&args.data, false)?;
    let raw = table.matrix()?;
    let scaler = (!args.no_scale).then(|| IqrScaler::fit(&raw));
    let train = match &scaler {
        Some(s) => s.apply(&raw)?,
        None => raw,
    };
    let setup = DescriptorSetup {
        coefficients,
        metric: args.common.metric.into(),
        seed: args.common.seed,
    };
    let model = setup.fit(&train)?;
    let saved = SavedModel {
        tool_version: TOOL_VERSION.to_string(),
        descriptor: kind,
        coefficients,
        hyperparameters: setup.resolve(train.n_rows(), train.n_cols()),
        metric: setup.metric,
        seed: setup.seed,
        fingerprint: table.fingerprint,
        scaler,
        model,
    };
    model_file::save(&args.out, &saved)?;
    println!(
        "fitted {kind} ({:?}) on {} rows × {} attributes -> {}",
        saved.hyperparameters,
        saved.fingerprint.rows,
        saved.fingerprint.cols,
        args.out.display()
    );
    Ok(())
}

pub fn score(args: &ScoreArgs) -> CliResult<()> {
    let saved = model_file::load(&args.model)?;
    let table = read_table(&args.data, false)?;
    if table.n_cols() != saved.model.dim() {
        return Err(CliError::invalid(format!(
            "{} has {} attributes, the model expects {}",
            table.fingerprint.path,
            table.n_cols(),
            saved.model.dim()
        )));
    }
    let mut scores = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let row = match &saved.scaler {
            Some(s) => s.apply_row(row)?,
            None => row.clone(),
        };
        scores.push(saved.model.score(&row)?.value());
    }
    write_output(args.out.as_ref(), |w| write_scores(w, &scores))
}

fn configure_threads(threads: usize) -> CliResult<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::invalid(format!("cannot start {threads} threads: {e}")))?;
    }
    Ok(())
}

struct Corpus {
    tasks: Vec<OccTask>,
    skipped: Vec<SkippedClass>,
    fingerprints: Vec<Fingerprint>,
}

fn load_corpus(paths: &[std::path::PathBuf], targets: &[String]) -> CliResult<Corpus> {
    let mut corpus = Corpus {
        tasks: Vec::new(),
        skipped: Vec::new(),
        fingerprints: Vec::new(),
    };
    let mut names: Vec<String> = Vec::new();
    for path in paths {
        let table: Table = read_table(path, true)?;
        if names.contains(&table.name) {
            return Err(CliError::invalid(format!(
                "two datasets named {:?}",
                table.name
            )));
        }
        names.push(table.name.clone());
        let x = table.matrix()?;
        let (tasks, skipped) = one_vs_rest_tasks(&table.name, &x, &table.labels)?;
        let wanted = |label: &str| targets.is_empty() || targets.iter().any(|t| t == label);
        corpus
            .tasks
            .extend(tasks.into_iter().filter(|t| wanted(t.target_label())));
        corpus
            .skipped
            .extend(skipped.into_iter().filter(|s| wanted(&s.label)));
        corpus.fingerprints.push(table.fingerprint);
    }
    for t in targets {
        let known = corpus.tasks.iter().any(|task| task.target_label() == t)
            || corpus.skipped.iter().any(|s| &s.label == t);
        if !known {
            return Err(CliError::invalid(format!("no class labelled {t:?}")));
        }
    }
    for s in &corpus.skipped {
        eprintln!("warning: skipping {}/{}: {}", s.dataset, s.label, s.reason);
    }
    if corpus.tasks.is_empty() {
        return Err(CliError::invalid("no class has enough rows to evaluate"));
    }
    Ok(corpus)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    tool_version: &'static str,
    seed: u64,
    metric: Metric,
    data: &'a [Fingerprint],
    skipped: &'a [SkippedClass],
    reports: Vec<EvalReport>,
}

fn emit_json<T: Serialize>(out: Option<&std::path::PathBuf>, value: &T) -> CliResult<()> {
    write_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

/// Human summary to stdout when JSON goes to a file, else to stderr.
fn summary(to_stdout: bool, line: String) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    configure_threads(args.threads)?;
    let kinds = args.common.descriptor.kinds();
    let corpus = load_corpus(&args.data, &args.target)?;
    let metric: Metric = args.common.metric.into();
    let mut reports = Vec::new();
    for &kind in &kinds {
        let setup = DescriptorSetup {
            coefficients: args.coefficients.resolve(kind, &kinds)?,
            metric,
            seed: args.common.seed,
        };
        let report = evaluate(&setup, &corpus.tasks, args.common.seed)?;
        summary(
            args.out.is_some(),
            format!(
                "{kind:<4}  mean AUROC {:.4}  ({} dataset{})",
                report.mean_auroc,
                report.datasets.len(),
                if report.datasets.len() == 1 { "" } else { "s" }
            ),
        );
        reports.push(report);
    }
    emit_json(
        args.out.as_ref(),
        &EvalOutput {
            tool_version: TOOL_VERSION,
            seed: args.common.seed,
            metric,
            data: &corpus.fingerprints,
            skipped: &corpus.skipped,
            reports,
        },
    )
}

/// Parses `start:stop:step:window`.
fn parse_axis(name: &str, spec: &str) -> CliResult<GridAxis> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::invalid(format!("--axis {spec:?}: expected start:stop:step:window"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let window = parts[3].trim().parse::<usize>().map_err(|_| bad())?;
    Ok(GridAxis::new(
        name,
        num(parts[0])?,
        num(parts[1])?,
        num(parts[2])?,
        window,
    )?)
}

fn tuning_grid(kind: DescriptorKind, axes: &[String]) -> CliResult<HyperGrid> {
    let default = HyperGrid::for_kind(kind);
    if axes.is_empty() {
        return Ok(default);
    }
    if axes.len() != default.axes.len() {
        return Err(CliError::invalid(format!(
            "{kind} has {} tuning axes, got {} --axis values",
            default.axes.len(),
            axes.len()
        )));
    }
    let parsed = default
        .axes
        .iter()
        .zip(axes)
        .map(|(d, spec)| parse_axis(&d.name, spec))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(HyperGrid::with_axes(kind, parsed)?)
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    tool_version: &'static str,
    seed: u64,
    metric: Metric,
    descriptor: DescriptorKind,
    data: &'a [Fingerprint],
    skipped: &'a [SkippedClass],
    search: GridSearch,
    lodo: Option<LodoReport>,
}

pub fn tune(args: &TuneArgs) -> CliResult<()> {
    configure_threads(args.threads)?;
    let kind = args.common.descriptor.single()?;
    if args.mode == TuneMode::Lodo && args.data.len() < 2 {
        return Err(CliError::invalid(
            "leave-one-dataset-out needs at least 2 --data files",
        ));
    }
    let grid = tuning_grid(kind, &args.axis)?;
    let corpus = load_corpus(&args.data, &[])?;
    let metric: Metric = args.common.metric.into();
    let seed = args.common.seed;

    let surfaces = task_surfaces(&corpus.tasks, &grid, metric, seed)?;
    let ids: Vec<&str> = corpus.tasks.iter().map(OccTask::dataset).collect();
    let search = select_coefficients(&grid, &surfaces, &ids)?;
    summary(
        args.out.is_some(),
        format!(
            "{kind}: best {:?} with smoothed mean AUROC {:.4} over {} grid points",
            search.best,
            search.best_smoothed,
            grid.len()
        ),
    );
    let lodo = match args.mode {
        TuneMode::Grid => None,
        TuneMode::Lodo => {
            let report = leave_one_dataset_out_with(&corpus.tasks, &surfaces, &grid, metric, seed)?;
            for (choice, section) in report.choices.iter().zip(&report.report.datasets) {
                summary(
                    args.out.is_some(),
                    format!(
                        "  held out {}: {:?}, held-out AUROC {:.4}",
                        choice.held_out, choice.coefficients, section.mean_auroc
                    ),
                );
            }
            Some(report)
        }
    };
    emit_json(
        args.out.as_ref(),
        &TuneOutput {
            tool_version: TOOL_VERSION,
            seed,
            metric,
            descriptor: kind,
            data: &corpus.fingerprints,
            skipped: &corpus.skipped,
            search,
            lodo,
        },
    )
}
