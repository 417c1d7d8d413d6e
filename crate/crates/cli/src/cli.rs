use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use occkit::descriptor::{Coefficients, DescriptorKind};
use occkit::Metric;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "occkit",
    version,
    about = "One-class classification: fit, score, evaluate, tune and time data descriptors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a descriptor on a numeric CSV and save the model.
    Fit(FitArgs),
    /// Score the rows of a numeric CSV with a saved model.
    Score(ScoreArgs),
    /// Cross-validated AUROC on labelled CSVs.
    Eval(EvalArgs),
    /// Grid search over reparametrised hyperparameters.
    Tune(TuneArgs),
    /// Time model construction and querying at doubling training sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriptorChoice {
    Nnd,
    Lnnd,
    Lof,
    Md,
    Svm,
    If,
    Eif,
    Alp,
    All,
}

impl DescriptorChoice {
    pub fn kinds(self) -> Vec<DescriptorKind> {
        match self {
            DescriptorChoice::Nnd => vec![DescriptorKind::Nnd],
            DescriptorChoice::Lnnd => vec![DescriptorKind::Lnnd],
            DescriptorChoice::Lof => vec![DescriptorKind::Lof],
            DescriptorChoice::Md => vec![DescriptorKind::Md],
            DescriptorChoice::Svm => vec![DescriptorKind::Svm],
            DescriptorChoice::If => vec![DescriptorKind::If],
            DescriptorChoice::Eif => vec![DescriptorKind::Eif],
            DescriptorChoice::Alp => vec![DescriptorKind::Alp],
            DescriptorChoice::All => DescriptorKind::ALL.to_vec(),
        }
    }

    pub fn single(self) -> CliResult<DescriptorKind> {
        match self.kinds().as_slice() {
            [k] => Ok(*k),
            _ => Err(CliError::invalid("this command takes a single descriptor")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    Manhattan,
    Euclidean,
}

impl From<MetricChoice> for Metric {
    fn from(m: MetricChoice) -> Metric {
        match m {
            MetricChoice::Manhattan => Metric::Manhattan,
            MetricChoice::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value = "alp")]
    pub descriptor: DescriptorChoice,

    #[arg(long, value_enum, default_value = "manhattan")]
    pub metric: MetricChoice,

    #[arg(long, env = "OCCKIT_SEED", default_value_t = 0)]
    pub seed: u64,
}

/// Coefficient overrides; anything left unset takes its default.
#[derive(Debug, Clone, Default, Args)]
pub struct CoefficientArgs {
    /// NND neighbour count.
    #[arg(long)]
    pub k: Option<usize>,

    /// a in k = a·ln n (LNND, LOF, ALP).
    #[arg(long)]
    pub k_coef: Option<f64>,

    /// b in l = b·ln n (ALP).
    #[arg(long)]
    pub l_coef: Option<f64>,

    /// SVM ν.
    #[arg(long)]
    pub nu: Option<f64>,

    /// c′ in the SVM kernel width c = c′·m.
    #[arg(long)]
    pub c_coef: Option<f64>,
}

impl CoefficientArgs {
    fn used_by(&self, kind: DescriptorKind) -> [bool; 5] {
        use DescriptorKind::*;
        [
            self.k.is_none() || kind == Nnd,
            self.k_coef.is_none() || matches!(kind, Lnnd | Lof | Alp),
            self.l_coef.is_none() || kind == Alp,
            self.nu.is_none() || kind == Svm,
            self.c_coef.is_none() || kind == Svm,
        ]
    }

    /// Overrides the defaults of `kind`. Flags that fit none of `kinds`
    /// are rejected.
    pub fn resolve(
        &self,
        kind: DescriptorKind,
        kinds: &[DescriptorKind],
    ) -> CliResult<Coefficients> {
        let names = ["--k", "--k-coef", "--l-coef", "--nu", "--c-coef"];
        for (i, name) in names.iter().enumerate() {
            if !kinds.iter().any(|&k| self.used_by(k)[i]) {
                return Err(CliError::invalid(format!(
                    "{name} does not apply to the chosen descriptor"
                )));
            }
        }
        let mut c = Coefficients::defaults(kind);
        match &mut c {
            Coefficients::Nnd { k } => *k = self.k.unwrap_or(*k),
            Coefficients::Lnnd { k_coef } | Coefficients::Lof { k_coef } => {
                *k_coef = self.k_coef.unwrap_or(*k_coef)
            }
            Coefficients::Svm { nu, c_coef } => {
                *nu = self.nu.unwrap_or(*nu);
                *c_coef = self.c_coef.unwrap_or(*c_coef);
            }
            Coefficients::Alp { k_coef, l_coef } => {
                *k_coef = self.k_coef.unwrap_or(*k_coef);
                *l_coef = self.l_coef.unwrap_or(*l_coef);
            }
            Coefficients::Md | Coefficients::If | Coefficients::Eif => {}
        }
        check_ranges(&c)?;
        Ok(c)
    }
}

fn check_ranges(c: &Coefficients) -> CliResult<()> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(CliError::invalid(format!(
                "{name} must be positive, got {v}"
            )))
        }
    };
    match *c {
        Coefficients::Nnd { k: 0 } => Err(CliError::invalid("--k must be at least 1")),
        Coefficients::Lnnd { k_coef } | Coefficients::Lof { k_coef } => {
            positive("--k-coef", k_coef)
        }
        Coefficients::Alp { k_coef, l_coef } => {
            positive("--k-coef", k_coef).and(positive("--l-coef", l_coef))
        }
        Coefficients::Svm { nu, c_coef } => {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(CliError::invalid(format!(
                    "--nu must lie in (0, 1], got {nu}"
                )));
            }
            positive("--c-coef", c_coef)
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub coefficients: CoefficientArgs,

    /// Numeric CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,

    /// Fit on raw values instead of IQR-scaled ones.
    #[arg(long)]
    pub no_scale: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long)]
    pub data: PathBuf,

    /// Scores CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub coefficients: CoefficientArgs,

    /// Labelled CSV (last column is the class); repeat for several datasets.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,

    /// Target class label; repeatable. Every class when absent.
    #[arg(long)]
    pub target: Vec<String>,

    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// JSON report; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TuneMode {
    /// One grid search over all datasets.
    Grid,
    /// Leave-one-dataset-out selection.
    Lodo,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: Common,

    /// Labelled CSV; repeat for several datasets.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "grid")]
    pub mode: TuneMode,

    /// Replaces the default grid, one `start:stop:step:window` per axis.
    #[arg(long)]
    pub axis: Vec<String>,

    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// JSON report; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub descriptor: DescriptorChoice,

    #[arg(long, value_enum, default_value = "manhattan")]
    pub metric: MetricChoice,

    #[arg(long, env = "OCCKIT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Numeric CSV to subsample; standard normal data when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Attributes of the generated data.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,

    /// Smallest training size is 2^min_exp.
    #[arg(long, default_value_t = 8)]
    pub min_exp: u32,

    /// Largest training size is 2^max_exp.
    #[arg(long, default_value_t = 12)]
    pub max_exp: u32,

    #[arg(long, default_value_t = 5)]
    pub repeats: usize,

    #[arg(long, default_value_t = 1024)]
    pub queries: usize,

    /// One row per repeat instead of means.
    #[arg(long)]
    pub raw: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,
}
