//! Nearest-neighbour data descriptors: NND, LNND, LOF and ALP.
//!
//! All four share one rule for training-side neighbour tables: a training
//! row is never its own neighbour. External queries never exclude anything.

mod alp;
mod lnnd;
mod lof;
mod nnd;
mod sweep;

pub use alp::{alp_terms, Alp, AlpModel, AlpTerms};
pub use lnnd::{localised_distance_score, Lnnd, LnndModel};
pub use lof::{local_reachability_densities, lof_ratio, Lof, LofModel};
pub use nnd::{Nnd, NndModel};
pub use sweep::NeighborhoodSweep;

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Clamps a neighbour count into `[1, n − 1]`.
pub fn clamp_neighbors(k: usize, n: usize) -> usize {
    k.clamp(1, n.saturating_sub(1).max(1))
}

fn require_two_rows(x: &FeatureMatrix, what: &str) -> Result<()> {
    if x.n_rows() < 2 {
        return Err(Error::insufficient(format!(
            "{what} needs at least 2 training rows, got {}",
            x.n_rows()
        )));
    }
    Ok(())
}
