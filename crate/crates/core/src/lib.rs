//! One-class classification with a uniform fit/score contract.
//!
//! Eight data descriptors are provided: nearest neighbour distance (NND),
//! localised NND (LNND), local outlier factor (LOF), Mahalanobis distance
//! (MD), the one-class SVM, isolation forests (IF and EIF), and average
//! localised proximity (ALP). Each is trained on target-class rows only and
//! yields a [`DataDescription`] scoring queries in `[0, 1]`, higher meaning
//! more target-like.
//!
//! ```
//! use occkit::{Alp, DataDescription, DataDescriptor, FeatureMatrix, Metric};
//!
//! let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, (i % 3) as f64]).collect();
//! let train = FeatureMatrix::from_rows(&rows).unwrap();
//! let model = Alp { k: 3, l: 4, metric: Metric::Manhattan }.fit(&train).unwrap();
//! let inside = model.score(&[10.0, 1.0]).unwrap().value();
//! let outside = model.score(&[60.0, 9.0]).unwrap().value();
//! assert!(inside > outside);
//! ```

pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod gaussian;
pub mod isolation;
pub mod model;
pub mod neighbors;
pub mod nn;
pub mod owa;
pub mod preprocessing;
pub mod svm;

pub use descriptor::{
    resolve_hyperparameters, Coefficients, DescriptorKind, DescriptorSetup, FittedModel,
    Hyperparameters,
};
pub use error::{Error, Result};
pub use evaluation::{auroc, EvalReport, HyperGrid, OccTask};
pub use gaussian::{Mahalanobis, MdModel};
pub use isolation::{IsolationForest, IsolationForestModel, SplitMode};
pub use model::{distance_to_score, DataDescription, DataDescriptor, FeatureMatrix, Score};
pub use neighbors::{Metric, NeighborIndex};
pub use nn::{Alp, AlpModel, Lnnd, LnndModel, Lof, LofModel, NeighborhoodSweep, Nnd, NndModel};
pub use owa::WeightVector;
pub use preprocessing::IqrScaler;
pub use svm::{OcSvmModel, OneClassSvm};
