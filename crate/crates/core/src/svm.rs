//! One-class SVM (hyperplane separating the data from the origin) with a
//! Gaussian kernel, solved in the dual by maximal-violating-pair descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_query, DataDescription, DataDescriptor, FeatureMatrix, Score};

pub const DEFAULT_NU: f64 = 0.20;
pub const DEFAULT_WIDTH_COEF: f64 = 0.25;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Minimum curvature used when a pair's kernel rows coincide.
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    width: f64,
}

impl GaussianKernel {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel width must be positive, got {width}"
            )));
        }
        Ok(GaussianKernel { width })
    }

    pub fn width(self) -> f64 {
        self.width
    }

    /// `exp(−‖x − y‖² / c)`; lengths are the caller's responsibility.
    #[inline]
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-sq / self.width).exp()
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], width: f64) -> Result<f64> {
    let k = GaussianKernel::new(width)?;
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(k.eval(x, y))
}

/// `½ (d / (|d| + 1) + 1)`: 0.5 on the hyperplane.
pub fn signed_distance_score(d: f64) -> Score {
    Score::clamped(0.5 * (d / (d.abs() + 1.0) + 1.0))
}

/// Solver output for `min ½ αᵀQα` over `{0 ≤ α ≤ C, Σα = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// `Qα`.
    pub gradient: Vec<f64>,
    pub iterations: usize,
    /// Final maximal KKT violation.
    pub residual: f64,
    /// Objective after every pair update, when requested.
    pub objective_trace: Vec<f64>,
}

impl DualSolution {
    pub fn objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(&self.gradient)
            .map(|(a, g)| a * g)
            .sum::<f64>()
    }
}

/// Pairwise descent on the one-class dual with Gram matrix `gram` (row-major
/// `n × n`) and box bound `upper`.
pub fn solve_dual(
    gram: &[f64],
    n: usize,
    upper: f64,
    tolerance: f64,
    max_iterations: usize,
    trace: bool,
) -> Result<DualSolution> {
    if gram.len() != n * n || n == 0 {
        return Err(Error::shape("Gram matrix is not n × n"));
    }
    if upper * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::invalid("box bound too small for Σα = 1"));
    }
    let upper = upper.min(1.0);

    // Fill the first ⌊1/C⌋ coordinates to the bound, the remainder next.
    let mut alpha = vec![0.0; n];
    let mut mass = 1.0;
    for a in alpha.iter_mut() {
        if mass <= 0.0 {
            break;
        }
        *a = upper.min(mass);
        mass -= *a;
    }
    let mut gradient: Vec<f64> = (0..n)
        .map(|r| {
            gram[r * n..(r + 1) * n]
                .iter()
                .zip(&alpha)
                .map(|(q, a)| q * a)
                .sum()
        })
        .collect();

    let objective = |alpha: &[f64], gradient: &[f64]| {
        0.5 * alpha.iter().zip(gradient).map(|(a, g)| a * g).sum::<f64>()
    };
    let mut objective_trace = Vec::new();
    if trace {
        objective_trace.push(objective(&alpha, &gradient));
    }

    let mut iterations = 0;
    loop {
        // i: may grow, smallest gradient; j: may shrink, largest gradient.
        let mut up: Option<(usize, f64)> = None;
        let mut down: Option<(usize, f64)> = None;
        for t in 0..n {
            let g = gradient[t];
            if alpha[t] < upper && up.is_none_or(|(_, best)| g < best) {
                up = Some((t, g));
            }
            if alpha[t] > 0.0 && down.is_none_or(|(_, best)| g > best) {
                down = Some((t, g));
            }
        }
        let (Some((i, gi)), Some((j, gj))) = (up, down) else {
            return Ok(DualSolution {
                alpha,
                gradient,
                iterations,
                residual: 0.0,
                objective_trace,
            });
        };
        let residual = gj - gi;
        if residual < tolerance {
            return Ok(DualSolution {
                alpha,
                gradient,
                iterations,
                residual: residual.max(0.0),
                objective_trace,
            });
        }
        if iterations >= max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual,
            });
        }
        iterations += 1;

        let curvature =
            (gram[i * n + i] + gram[j * n + j] - 2.0 * gram[i * n + j]).max(MIN_CURVATURE);
        let room_i = upper - alpha[i];
        let room_j = alpha[j];
        let step = residual / curvature;
        let delta = if step >= room_i.min(room_j) {
            if room_i <= room_j {
                alpha[j] -= room_i;
                alpha[i] = upper;
                room_i
            } else {
                alpha[i] += room_j;
                alpha[j] = 0.0;
                room_j
            }
        } else {
            alpha[i] += step;
            alpha[j] -= step;
            step
        };
        let (row_i, row_j) = (&gram[i * n..(i + 1) * n], &gram[j * n..(j + 1) * n]);
        for ((g, qi), qj) in gradient.iter_mut().zip(row_i).zip(row_j) {
            *g += delta * (qi - qj);
        }
        if trace {
            objective_trace.push(objective(&alpha, &gradient));
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Offset from a converged dual solution.
fn recover_offset(alpha: &[f64], gradient: &[f64], upper: f64) -> f64 {
    let eps = 1e-12 * upper;
    let mut free: Vec<f64> = alpha
        .iter()
        .zip(gradient)
        .filter(|(&a, _)| a > eps && a < upper - eps)
        .map(|(_, &g)| g)
        .collect();
    if !free.is_empty() {
        return median(&mut free);
    }
    let at_upper = alpha
        .iter()
        .zip(gradient)
        .filter(|(&a, _)| a >= upper - eps)
        .map(|(_, &g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    let at_zero = alpha
        .iter()
        .zip(gradient)
        .filter(|(&a, _)| a <= eps)
        .map(|(_, &g)| g)
        .fold(f64::INFINITY, f64::min);
    match (at_upper.is_finite(), at_zero.is_finite()) {
        (true, true) => 0.5 * (at_upper + at_zero),
        (true, false) => at_upper,
        (false, true) => at_zero,
        (false, false) => 0.0,
    }
}

/// One-class SVM hyperparameters; `width` is the absolute kernel width `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneClassSvm {
    pub nu: f64,
    pub width: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl OneClassSvm {
    pub fn new(nu: f64, width: f64) -> Self {
        OneClassSvm {
            nu,
            width,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    /// `ν = 0.20`, `c = 0.25 m`.
    pub fn with_defaults(n_attributes: usize) -> Self {
        Self::new(DEFAULT_NU, DEFAULT_WIDTH_COEF * n_attributes as f64)
    }
}

impl DataDescriptor for OneClassSvm {
    type Description = OcSvmModel;

    fn fit(&self, train: &FeatureMatrix) -> Result<OcSvmModel> {
        OcSvmModel::fit(train, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcSvmModel {
    support: Vec<f64>,
    alpha: Vec<f64>,
    rho: f64,
    nu: f64,
    kernel: GaussianKernel,
    dim: usize,
    iterations: usize,
    residual: f64,
}

pub fn gram_matrix(x: &FeatureMatrix, kernel: GaussianKernel) -> Vec<f64> {
    let n = x.n_rows();
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        gram[a * n + a] = 1.0;
        for b in a + 1..n {
            let v = kernel.eval(x.row(a), x.row(b));
            gram[a * n + b] = v;
            gram[b * n + a] = v;
        }
    }
    gram
}

impl OcSvmModel {
    pub fn fit(x: &FeatureMatrix, params: &OneClassSvm) -> Result<Self> {
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::insufficient(format!(
                "SVM needs at least 2 rows, got {n}"
            )));
        }
        if !(params.nu > 0.0 && params.nu <= 1.0) {
            return Err(Error::invalid(format!(
                "ν must lie in (0, 1], got {}",
                params.nu
            )));
        }
        let kernel = GaussianKernel::new(params.width)?;
        let gram = gram_matrix(x, kernel);
        let upper = 1.0 / (params.nu * n as f64);
        let sol = solve_dual(
            &gram,
            n,
            upper,
            params.tolerance,
            params.max_iterations,
            false,
        )?;
        let rho = recover_offset(&sol.alpha, &sol.gradient, upper.min(1.0));

        let mut support = Vec::new();
        let mut alpha = Vec::new();
        for (r, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support.extend_from_slice(x.row(r));
                alpha.push(a);
            }
        }
        Ok(OcSvmModel {
            support,
            alpha,
            rho,
            nu: params.nu,
            kernel,
            dim: x.n_cols(),
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kernel(&self) -> GaussianKernel {
        self.kernel
    }

    /// Coefficients of the support vectors, in training order.
    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_support(&self) -> usize {
        self.alpha.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `d_S(y) = Σ αᵢ k(xᵢ, y) − ρ`.
    pub fn signed_distance(&self, query: &[f64]) -> Result<f64> {
        check_query(self.dim, query)?;
        let s: f64 = self
            .support
            .chunks_exact(self.dim)
            .zip(&self.alpha)
            .map(|(sv, a)| a * self.kernel.eval(sv, query))
            .sum();
        Ok(s - self.rho)
    }
}

impl DataDescription for OcSvmModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, query: &[f64]) -> Result<Score> {
        Ok(signed_distance_score(self.signed_distance(query)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, m: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::from_vec(
            n,
            m,
            (0..n * m).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(gaussian_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.7).unwrap(), 1.0);
        let v = gaussian_kernel(&[0.0, 0.0], &[1.0, 1.0], 2.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(
            gaussian_kernel(&[0.3, -1.0], &[2.0, 0.5], 1.3).unwrap(),
            gaussian_kernel(&[2.0, 0.5], &[0.3, -1.0], 1.3).unwrap()
        );
        assert!(matches!(
            gaussian_kernel(&[0.0], &[1.0], 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(gaussian_kernel(&[0.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn score_map() {
        assert_eq!(signed_distance_score(0.0).value(), 0.5);
        assert!((signed_distance_score(1e300).value() - 1.0).abs() < 1e-15);
        assert!(signed_distance_score(-1e300).value().abs() < 1e-15);
        assert!(signed_distance_score(0.1) > signed_distance_score(0.05));
    }

    #[test]
    fn nu_one_gives_uniform_alpha() {
        let x = gaussian(7, 2, 1);
        let m = OcSvmModel::fit(&x, &OneClassSvm::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_support(), 7);
        for &a in m.alphas() {
            assert!((a - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_pair() {
        let x = FeatureMatrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap();
        for nu in [0.5, 0.8, 1.0] {
            let m = OcSvmModel::fit(&x, &OneClassSvm::new(nu, 1.0)).unwrap();
            assert_eq!(m.n_support(), 2);
            for &a in m.alphas() {
                assert!((a - 0.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn far_query_tends_to_minus_rho() {
        let x = gaussian(50, 2, 8);
        let m = OcSvmModel::fit(&x, &OneClassSvm::new(0.2, 0.5)).unwrap();
        assert!(m.rho() > 0.0);
        let d = m.signed_distance(&[1e3, 1e3]).unwrap();
        assert!((d + m.rho()).abs() < 1e-12);
        let expected = 0.5 * (-m.rho() / (m.rho() + 1.0) + 1.0);
        assert!((m.score(&[1e3, 1e3]).unwrap().value() - expected).abs() < 1e-12);
    }

    #[test]
    fn dual_constraints_and_monotone_objective() {
        let x = gaussian(80, 3, 2);
        let kernel = GaussianKernel::new(0.75).unwrap();
        let gram = gram_matrix(&x, kernel);
        let upper = 1.0 / (0.3 * 80.0);
        let sol = solve_dual(&gram, 80, upper, 1e-6, DEFAULT_MAX_ITERATIONS, true).unwrap();
        assert!((sol.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(sol
            .alpha
            .iter()
            .all(|&a| (0.0..=upper + 1e-12).contains(&a)));
        assert!(sol.residual < 1e-6);
        assert!(sol.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn duplicated_training_set_gives_same_decision_function() {
        let x = gaussian(40, 2, 6);
        let rows: Vec<Vec<f64>> = x.rows().chain(x.rows()).map(<[f64]>::to_vec).collect();
        let doubled = FeatureMatrix::from_rows(&rows).unwrap();
        let params = OneClassSvm {
            tolerance: 1e-10,
            ..OneClassSvm::new(0.25, 1.0)
        };
        let a = OcSvmModel::fit(&x, &params).unwrap();
        let b = OcSvmModel::fit(&doubled, &params).unwrap();
        let probe = gaussian(20, 2, 99);
        for q in probe.rows() {
            let (da, db) = (a.signed_distance(q).unwrap(), b.signed_distance(q).unwrap());
            assert!((da - db).abs() < 1e-6, "{da} vs {db}");
        }
    }

    #[test]
    fn iteration_cap_reports_convergence_error() {
        let x = gaussian(30, 2, 3);
        let params = OneClassSvm {
            max_iterations: 1,
            tolerance: 1e-12,
            ..OneClassSvm::new(0.1, 1.0)
        };
        match OcSvmModel::fit(&x, &params) {
            Err(Error::Convergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = gaussian(10, 2, 3);
        assert!(OcSvmModel::fit(&x, &OneClassSvm::new(0.0, 1.0)).is_err());
        assert!(OcSvmModel::fit(&x, &OneClassSvm::new(1.5, 1.0)).is_err());
        assert!(OcSvmModel::fit(&x, &OneClassSvm::new(0.5, 0.0)).is_err());
        let one = gaussian(1, 2, 3);
        assert!(matches!(
            OcSvmModel::fit(&one, &OneClassSvm::new(0.5, 1.0)),
            Err(Error::InsufficientData(_))
        ));
    }
}
