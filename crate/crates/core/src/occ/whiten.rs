//! Ellipsoidal and graph-embedded variants: a learned linear transform is
//! applied before an ordinary hypersphere or hyperplane model, so a sphere in
//! the transformed space is an ellipsoid in the input space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{rows_of, KernelChoice};
use super::linalg::inverse_sqrt_spd;
use super::ocsvm::{ocsvm_fit_rows, OcsvmModel};
use super::svdd::{svdd_fit_rows, SvddModel};
use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhitenKind {
    /// `(Cov + eps I)^{-1/2}`
    Ellipsoid,
    /// `(X'LX + eps I)^{-1/2}` for a kNN-graph Laplacian `L`.
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenSpec {
    /// Symmetric `D x D` transform.
    pub transform: DMatrix<f64>,
    pub kind: WhitenKind,
    pub epsilon: f64,
    pub k_neighbors: Option<usize>,
}

impl WhitenSpec {
    pub fn dimension(&self) -> usize {
        self.transform.nrows()
    }

    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok((0..self.dimension())
            .map(|i| self.transform.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect())
    }

    pub fn apply_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")))
    }
}

/// Population covariance of the rows of `x`.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] - mean[c]);
    (centered.transpose() * &centered) / n
}

pub fn ellipsoid_whitening(x: &DMatrix<f64>, epsilon: f64) -> Result<WhitenSpec> {
    check_epsilon(epsilon)?;
    if x.nrows() == 0 {
        return Err(Error::invalid("cannot whiten an empty matrix"));
    }
    let mut cov = covariance(x);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance".into()));
    }
    for i in 0..cov.nrows() {
        cov[(i, i)] += epsilon;
    }
    Ok(WhitenSpec {
        transform: inverse_sqrt_spd(&cov)?,
        kind: WhitenKind::Ellipsoid,
        epsilon,
        k_neighbors: None,
    })
}

/// `L = Deg - A` for the symmetric (max-mutualized) kNN adjacency.
/// Neighbour ties are broken by sample index.
pub fn graph_laplacian(x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("need 0 < k < n, got k = {k} with n = {n}")));
    }
    let rows = rows_of(x);
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum(), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in d.iter().take(k) {
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
    }
    let mut lap = -adj.clone();
    for i in 0..n {
        lap[(i, i)] = adj.row(i).sum();
    }
    Ok(lap)
}

pub fn graph_whitening(x: &DMatrix<f64>, k: usize, epsilon: f64) -> Result<WhitenSpec> {
    check_epsilon(epsilon)?;
    let lap = graph_laplacian(x, k)?;
    let mut scatter = x.transpose() * lap * x;
    for i in 0..scatter.nrows() {
        scatter[(i, i)] += epsilon;
    }
    Ok(WhitenSpec {
        transform: inverse_sqrt_spd(&scatter)?,
        kind: WhitenKind::Graph,
        epsilon,
        k_neighbors: Some(k),
    })
}

fn fit_svdd_on(x: &DMatrix<f64>, spec: WhitenSpec, c: f64, kernel: KernelChoice) -> Result<(WhitenSpec, SvddModel)> {
    let rows = spec.apply_rows(&rows_of(x))?;
    let kernel = kernel.resolve(&rows)?;
    let model = svdd_fit_rows(&rows, c, kernel, Execution::default())?;
    Ok((spec, model))
}

/// Ellipsoidal data description: covariance whitening followed by SVDD.
pub fn esvdd_fit(x: &DMatrix<f64>, c: f64, epsilon: f64, kernel: KernelChoice) -> Result<(WhitenSpec, SvddModel)> {
    fit_svdd_on(x, ellipsoid_whitening(x, epsilon)?, c, kernel)
}

/// Graph-embedded SVDD: Laplacian-scatter whitening followed by SVDD.
pub fn gesvdd_fit(x: &DMatrix<f64>, c: f64, k: usize, epsilon: f64, kernel: KernelChoice) -> Result<(WhitenSpec, SvddModel)> {
    fit_svdd_on(x, graph_whitening(x, k, epsilon)?, c, kernel)
}

/// Graph-embedded OC-SVM.
pub fn geocsvm_fit(x: &DMatrix<f64>, nu: f64, k: usize, epsilon: f64, kernel: KernelChoice) -> Result<(WhitenSpec, OcsvmModel)> {
    let spec = graph_whitening(x, k, epsilon)?;
    let rows = spec.apply_rows(&rows_of(x))?;
    let kernel = kernel.resolve(&rows)?;
    let model = ocsvm_fit_rows(&rows, nu, kernel, Execution::default())?;
    Ok((spec, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occ::linalg::sorted_eigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_point_laplacian() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let l = graph_laplacian(&x, 1).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert!(graph_laplacian(&x, 2).is_err());
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        let l = graph_laplacian(&x, 4).unwrap();
        for r in l.row_iter() {
            assert!(r.sum().abs() < 1e-12);
        }
        assert_eq!(l, l.transpose());
        let (v, _) = sorted_eigen(&l);
        assert!(*v.last().unwrap() >= -1e-8);
    }

    #[test]
    fn complete_graph_is_scaled_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 12;
        let x = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
        let l = graph_laplacian(&x, n - 1).unwrap();
        let scatter = x.transpose() * l * &x;
        let cov = covariance(&x) * (n * n) as f64;
        assert!((scatter - cov).abs().max() < 1e-9);
    }

    #[test]
    fn large_epsilon_is_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(40, 3, |_, _| StandardNormal.sample(&mut rng));
        let w = ellipsoid_whitening(&x, 1e8).unwrap();
        let scaled = &w.transform * 1e4;
        assert!((scaled - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-6);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(ellipsoid_whitening(&x, 0.0).is_err());
        assert!(graph_whitening(&x, 1, -1.0).is_err());
    }
}
