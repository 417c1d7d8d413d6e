//! Synthetic workloads shared by the criterion benches.

use occkit::{DescriptorKind, DescriptorSetup, FeatureMatrix, FittedModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Training sizes used by the benches, 2^6 through 2^10.
pub const SIZES: [usize; 5] = [64, 128, 256, 512, 1024];

/// Number of query rows scored per iteration.
pub const QUERIES: usize = 256;

/// Rows drawn i.i.d. from a standard normal in `m` dimensions.
pub fn gaussian_matrix(n: usize, m: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n * m)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    FeatureMatrix::from_vec(n, m, values).expect("finite gaussian draws")
}

/// Training and query sets drawn from disjoint seeds.
pub fn workload(n: usize, m: usize, seed: u64) -> (FeatureMatrix, FeatureMatrix) {
    (
        gaussian_matrix(n, m, seed),
        gaussian_matrix(QUERIES, m, seed ^ 0x9e37_79b9),
    )
}

/// Fits `kind` with its default coefficients.
pub fn fit_default(kind: DescriptorKind, train: &FeatureMatrix, seed: u64) -> FittedModel {
    DescriptorSetup::defaults(kind, seed)
        .fit(train)
        .expect("default fit")
}
