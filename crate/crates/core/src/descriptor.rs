//! The descriptor catalogue: kinds, coefficient reparametrisations, their
//! resolution into concrete hyperparameters, and a type-erased fitted model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::MdModel;
use crate::isolation::{IsolationForest, IsolationForestModel, SplitMode};
use crate::model::{DataDescription, FeatureMatrix, Score};
use crate::neighbors::Metric;
use crate::nn::{clamp_neighbors, AlpModel, LnndModel, LofModel, NndModel};
use crate::svm::{OcSvmModel, OneClassSvm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Nnd,
    Lnnd,
    Lof,
    Md,
    Svm,
    If,
    Eif,
    Alp,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 8] = [
        DescriptorKind::Nnd,
        DescriptorKind::Lnnd,
        DescriptorKind::Lof,
        DescriptorKind::Md,
        DescriptorKind::Svm,
        DescriptorKind::If,
        DescriptorKind::Eif,
        DescriptorKind::Alp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Nnd => "nnd",
            DescriptorKind::Lnnd => "lnnd",
            DescriptorKind::Lof => "lof",
            DescriptorKind::Md => "md",
            DescriptorKind::Svm => "svm",
            DescriptorKind::If => "if",
            DescriptorKind::Eif => "eif",
            DescriptorKind::Alp => "alp",
        }
    }

    /// Whether the descriptor has hyperparameters to tune.
    pub fn is_tunable(self) -> bool {
        matches!(
            self,
            DescriptorKind::Nnd
                | DescriptorKind::Lnnd
                | DescriptorKind::Lof
                | DescriptorKind::Svm
                | DescriptorKind::Alp
        )
    }

    pub fn uses_metric(self) -> bool {
        matches!(
            self,
            DescriptorKind::Nnd | DescriptorKind::Lnnd | DescriptorKind::Lof | DescriptorKind::Alp
        )
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown descriptor {s:?}")))
    }
}

/// Default coefficients found to work well across many datasets.
pub mod defaults {
    pub const NND_K: usize = 1;
    pub const LNND_K_COEF: f64 = 3.4;
    pub const LOF_K_COEF: f64 = 2.5;
    pub const SVM_NU: f64 = crate::svm::DEFAULT_NU;
    pub const SVM_WIDTH_COEF: f64 = crate::svm::DEFAULT_WIDTH_COEF;
    pub const ALP_K_COEF: f64 = 5.5;
    pub const ALP_L_COEF: f64 = 6.0;
}

/// Hyperparameters in their size-independent form: `k = a·ln n`,
/// `l = b·ln n`, SVM width `c = c′·m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficients {
    Nnd { k: usize },
    Lnnd { k_coef: f64 },
    Lof { k_coef: f64 },
    Md,
    Svm { nu: f64, c_coef: f64 },
    If,
    Eif,
    Alp { k_coef: f64, l_coef: f64 },
}

impl Coefficients {
    pub fn defaults(kind: DescriptorKind) -> Self {
        use defaults::*;
        match kind {
            DescriptorKind::Nnd => Coefficients::Nnd { k: NND_K },
            DescriptorKind::Lnnd => Coefficients::Lnnd {
                k_coef: LNND_K_COEF,
            },
            DescriptorKind::Lof => Coefficients::Lof { k_coef: LOF_K_COEF },
            DescriptorKind::Md => Coefficients::Md,
            DescriptorKind::Svm => Coefficients::Svm {
                nu: SVM_NU,
                c_coef: SVM_WIDTH_COEF,
            },
            DescriptorKind::If => Coefficients::If,
            DescriptorKind::Eif => Coefficients::Eif,
            DescriptorKind::Alp => Coefficients::Alp {
                k_coef: ALP_K_COEF,
                l_coef: ALP_L_COEF,
            },
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        match self {
            Coefficients::Nnd { .. } => DescriptorKind::Nnd,
            Coefficients::Lnnd { .. } => DescriptorKind::Lnnd,
            Coefficients::Lof { .. } => DescriptorKind::Lof,
            Coefficients::Md => DescriptorKind::Md,
            Coefficients::Svm { .. } => DescriptorKind::Svm,
            Coefficients::If => DescriptorKind::If,
            Coefficients::Eif => DescriptorKind::Eif,
            Coefficients::Alp { .. } => DescriptorKind::Alp,
        }
    }

    /// Coordinates of these coefficients on a tuning grid.
    pub fn point(&self) -> Vec<f64> {
        match *self {
            Coefficients::Nnd { k } => vec![k as f64],
            Coefficients::Lnnd { k_coef } | Coefficients::Lof { k_coef } => vec![k_coef],
            Coefficients::Svm { nu, c_coef } => vec![nu, c_coef],
            Coefficients::Alp { k_coef, l_coef } => vec![k_coef, l_coef],
            Coefficients::Md | Coefficients::If | Coefficients::Eif => vec![],
        }
    }

    /// Inverse of [`point`](Self::point).
    pub fn from_point(kind: DescriptorKind, point: &[f64]) -> Result<Self> {
        let want = Coefficients::defaults(kind).point().len();
        if point.len() != want {
            return Err(Error::shape(format!(
                "{kind} takes {want} coefficients, got {}",
                point.len()
            )));
        }
        Ok(match kind {
            DescriptorKind::Nnd => {
                if point[0] < 1.0 || point[0].fract() != 0.0 {
                    return Err(Error::invalid(format!(
                        "NND k must be a positive integer, got {}",
                        point[0]
                    )));
                }
                Coefficients::Nnd {
                    k: point[0] as usize,
                }
            }
            DescriptorKind::Lnnd => Coefficients::Lnnd { k_coef: point[0] },
            DescriptorKind::Lof => Coefficients::Lof { k_coef: point[0] },
            DescriptorKind::Svm => Coefficients::Svm {
                nu: point[0],
                c_coef: point[1],
            },
            DescriptorKind::Alp => Coefficients::Alp {
                k_coef: point[0],
                l_coef: point[1],
            },
            DescriptorKind::Md => Coefficients::Md,
            DescriptorKind::If => Coefficients::If,
            DescriptorKind::Eif => Coefficients::Eif,
        })
    }
}

/// Concrete hyperparameters for a training set of known size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hyperparameters {
    Nnd { k: usize },
    Lnnd { k: usize },
    Lof { k: usize },
    Md,
    Svm { nu: f64, width: f64 },
    If,
    Eif,
    Alp { k: usize, l: usize },
}

/// `round(coef · ln n)`, clamped into `[1, n − 1]`.
pub fn log_scaled_count(coef: f64, n: usize) -> usize {
    let raw = (coef * (n as f64).ln()).round();
    let raw = if raw.is_finite() && raw >= 1.0 {
        raw as usize
    } else {
        1
    };
    clamp_neighbors(raw, n)
}

pub fn resolve_hyperparameters(coefficients: &Coefficients, n: usize, m: usize) -> Hyperparameters {
    match *coefficients {
        Coefficients::Nnd { k } => Hyperparameters::Nnd {
            k: clamp_neighbors(k, n),
        },
        Coefficients::Lnnd { k_coef } => Hyperparameters::Lnnd {
            k: log_scaled_count(k_coef, n),
        },
        Coefficients::Lof { k_coef } => Hyperparameters::Lof {
            k: log_scaled_count(k_coef, n),
        },
        Coefficients::Md => Hyperparameters::Md,
        Coefficients::Svm { nu, c_coef } => Hyperparameters::Svm {
            nu,
            width: c_coef * m as f64,
        },
        Coefficients::If => Hyperparameters::If,
        Coefficients::Eif => Hyperparameters::Eif,
        Coefficients::Alp { k_coef, l_coef } => Hyperparameters::Alp {
            k: log_scaled_count(k_coef, n),
            l: log_scaled_count(l_coef, n),
        },
    }
}

/// A descriptor with its coefficients, metric and random seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSetup {
    pub coefficients: Coefficients,
    pub metric: Metric,
    pub seed: u64,
}

impl DescriptorSetup {
    pub fn defaults(kind: DescriptorKind, seed: u64) -> Self {
        DescriptorSetup {
            coefficients: Coefficients::defaults(kind),
            metric: Metric::Manhattan,
            seed,
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        self.coefficients.kind()
    }

    pub fn resolve(&self, n: usize, m: usize) -> Hyperparameters {
        resolve_hyperparameters(&self.coefficients, n, m)
    }

    pub fn fit(&self, train: &FeatureMatrix) -> Result<FittedModel> {
        let hp = self.resolve(train.n_rows(), train.n_cols());
        fit_hyperparameters(&hp, self.metric, self.seed, train)
    }
}

pub fn fit_hyperparameters(
    hp: &Hyperparameters,
    metric: Metric,
    seed: u64,
    train: &FeatureMatrix,
) -> Result<FittedModel> {
    Ok(match *hp {
        Hyperparameters::Nnd { k } => FittedModel::Nnd(NndModel::fit(train, metric, k)?),
        Hyperparameters::Lnnd { k } => FittedModel::Lnnd(LnndModel::fit(train, metric, k)?),
        Hyperparameters::Lof { k } => FittedModel::Lof(LofModel::fit(train, metric, k)?),
        Hyperparameters::Md => FittedModel::Md(MdModel::fit(train)?),
        Hyperparameters::Svm { nu, width } => {
            FittedModel::Svm(OcSvmModel::fit(train, &OneClassSvm::new(nu, width))?)
        }
        Hyperparameters::If => FittedModel::If(IsolationForestModel::fit(
            train,
            &IsolationForest::new(SplitMode::Axis, seed),
        )?),
        Hyperparameters::Eif => FittedModel::Eif(IsolationForestModel::fit(
            train,
            &IsolationForest::new(SplitMode::Extended, seed),
        )?),
        Hyperparameters::Alp { k, l } => FittedModel::Alp(AlpModel::fit(train, metric, k, l)?),
    })
}

/// Any fitted descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Nnd(NndModel),
    Lnnd(LnndModel),
    Lof(LofModel),
    Md(MdModel),
    Svm(OcSvmModel),
    If(IsolationForestModel),
    Eif(IsolationForestModel),
    Alp(AlpModel),
}

impl FittedModel {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            FittedModel::Nnd(_) => DescriptorKind::Nnd,
            FittedModel::Lnnd(_) => DescriptorKind::Lnnd,
            FittedModel::Lof(_) => DescriptorKind::Lof,
            FittedModel::Md(_) => DescriptorKind::Md,
            FittedModel::Svm(_) => DescriptorKind::Svm,
            FittedModel::If(_) => DescriptorKind::If,
            FittedModel::Eif(_) => DescriptorKind::Eif,
            FittedModel::Alp(_) => DescriptorKind::Alp,
        }
    }

    fn inner(&self) -> &dyn DataDescription {
        match self {
            FittedModel::Nnd(m) => m,
            FittedModel::Lnnd(m) => m,
            FittedModel::Lof(m) => m,
            FittedModel::Md(m) => m,
            FittedModel::Svm(m) => m,
            FittedModel::If(m) | FittedModel::Eif(m) => m,
            FittedModel::Alp(m) => m,
        }
    }
}

impl DataDescription for FittedModel {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        self.inner().score(query)
    }
}
