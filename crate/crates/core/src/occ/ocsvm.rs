use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{gram_self, rows_of, KernelSpec};
use super::solver::{solve_simplex_box, SolverOptions};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Hyperplane separating the training data from the origin in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub alphas: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub rho: f64,
    pub nu: f64,
    pub kernel: KernelSpec,
}

pub fn ocsvm_fit(x: &DMatrix<f64>, nu: f64, kernel: KernelSpec) -> Result<OcsvmModel> {
    ocsvm_fit_rows(&rows_of(x), nu, kernel, Execution::default())
}

/// Solves `min 0.5 a'Ka` s.t. `sum a = 1`, `0 <= a <= 1/(nu N)`.
pub fn ocsvm_fit_rows(rows: &[Vec<f64>], nu: f64, kernel: KernelSpec, exec: Execution) -> Result<OcsvmModel> {
    kernel.validate()?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(format!("nu must lie in (0, 1], got {nu}")));
    }
    if rows.is_empty() {
        return Err(Error::invalid("OC-SVM needs training samples"));
    }
    let n = rows.len();
    let k = gram_self(rows, &kernel, exec);
    let upper = 1.0 / (nu * n as f64);
    let sol = solve_simplex_box(&k, &vec![0.0; n], upper, &SolverOptions::default())?;
    let idx: Vec<usize> = (0..n).filter(|&i| sol.alphas[i] > 0.0).collect();
    let mut model = OcsvmModel {
        alphas: idx.iter().map(|&i| sol.alphas[i]).collect(),
        support: idx.iter().map(|&i| rows[i].clone()).collect(),
        rho: 0.0,
        nu,
        kernel,
    };
    // rho sits at the unbounded support vector closest to the origin side, so
    // boundary samples score <= 0 exactly
    let boundary = (0..n)
        .filter(|&i| sol.is_free(i))
        .map(|i| model.score(&rows[i]).map(|s| -s))
        .try_fold(f64::INFINITY, |m, w| w.map(|w| m.min(w)))?;
    model.rho = if boundary.is_finite() { boundary } else { sol.offset };
    Ok(model)
}

impl OcsvmModel {
    pub fn dimension(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    /// `rho - sum a_i K(x, x_i)`: positive on the origin side of the hyperplane.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let w: f64 = self.alphas.iter().zip(&self.support).map(|(a, s)| a * self.kernel.eval(x, s)).sum();
        Ok(self.rho - w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn nu_one_forces_uniform() {
        let x = gaussian(20, 3, 1);
        let m = ocsvm_fit(&x, 1.0, KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert_eq!(m.alphas.len(), 20);
        assert!(m.alphas.iter().all(|a| (a - 0.05).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_nu() {
        let x = gaussian(5, 2, 1);
        assert!(ocsvm_fit(&x, 0.0, KernelSpec::Linear).is_err());
        assert!(ocsvm_fit(&x, 1.5, KernelSpec::Linear).is_err());
    }

    #[test]
    fn free_support_vectors_on_boundary() {
        let x = gaussian(80, 2, 9);
        let m = ocsvm_fit(&x, 0.2, KernelSpec::rbf(1.0).unwrap()).unwrap();
        let upper = 1.0 / (0.2 * 80.0);
        let sum: f64 = m.alphas.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        let mut free = 0;
        for (a, s) in m.alphas.iter().zip(&m.support) {
            assert!(*a <= upper);
            if *a < upper {
                free += 1;
                assert!(m.score(s).unwrap().abs() < 1e-6);
            }
        }
        assert!(free > 0);
    }

    #[test]
    fn nu_bounds_training_outliers() {
        let x = gaussian(200, 2, 4);
        let m = ocsvm_fit(&x, 0.1, KernelSpec::rbf(1.0).unwrap()).unwrap();
        let outliers = x
            .row_iter()
            .filter(|r| m.score(&r.iter().copied().collect::<Vec<_>>()).unwrap() > 0.0)
            .count();
        assert!(outliers as f64 / 200.0 <= 0.15, "{outliers}");
    }
}
