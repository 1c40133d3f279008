//! Explicit finite-dimensional embedding of a kernel (nonlinear projection
//! trick): the centered gram is factored as `Phi' Phi`, so linear machinery
//! can run on kernel data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{gram_self, KernelSpec};
use super::linalg::sorted_eigen;
use crate::error::{Error, Result};
use crate::par::Execution;

/// Eigenvalues at or below this are dropped.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Factorization of a double-centered gram.
#[derive(Debug, Clone, PartialEq)]
pub struct NptFactors {
    /// `r x n`, columns are the embedded samples.
    pub phi: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// `n x r` eigenvectors matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

pub fn center_gram(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / n as f64).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - row_means[j] + total)
}

/// Centers `k`, eigendecomposes it and returns `Phi = Lambda^{1/2} V'`.
pub fn npt_embed(k: &DMatrix<f64>) -> Result<NptFactors> {
    if k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: k.ncols(),
        });
    }
    let asym = (k - k.transpose()).abs().max();
    if asym > 1e-8 * k.abs().max().max(1.0) {
        return Err(Error::invalid(format!("gram matrix is not symmetric (max deviation {asym:e})")));
    }
    let kc = center_gram(k);
    let (values, vectors) = sorted_eigen(&kc);
    let scale = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(&min) = values.last() {
        if min < -1e-8 * scale {
            return Err(Error::invalid(format!("gram matrix is not PSD (eigenvalue {min:e})")));
        }
    }
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > EIGEN_CUTOFF).collect();
    let n = k.nrows();
    let eigenvectors = DMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])]);
    let eigenvalues: Vec<f64> = keep.iter().map(|&i| values[i]).collect();
    let phi = DMatrix::from_fn(keep.len(), n, |r, c| eigenvalues[r].sqrt() * eigenvectors[(c, r)]);
    Ok(NptFactors {
        phi,
        eigenvalues,
        eigenvectors,
    })
}

/// Kernel embedding fitted on training rows that can place new samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NptEmbedding {
    pub kernel: KernelSpec,
    pub samples: Vec<Vec<f64>>,
    /// `r x n` map `Lambda^{-1/2} V'` applied to a centered kernel vector.
    pub projection: DMatrix<f64>,
    pub gram_row_means: Vec<f64>,
    pub gram_mean: f64,
}

impl NptEmbedding {
    /// Returns the embedding and the `n x r` training coordinates.
    pub fn fit(rows: &[Vec<f64>], kernel: KernelSpec, exec: Execution) -> Result<(Self, DMatrix<f64>)> {
        kernel.validate()?;
        let k = gram_self(rows, &kernel, exec);
        let factors = npt_embed(&k)?;
        if factors.eigenvalues.is_empty() {
            return Err(Error::invalid("kernel embedding is empty (all training samples coincide)"));
        }
        let n = rows.len();
        let r = factors.eigenvalues.len();
        let projection = DMatrix::from_fn(r, n, |i, j| factors.eigenvectors[(j, i)] / factors.eigenvalues[i].sqrt());
        let gram_row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / n as f64).collect();
        let gram_mean = gram_row_means.iter().sum::<f64>() / n as f64;
        let coords = factors.phi.transpose();
        Ok((
            NptEmbedding {
                kernel,
                samples: rows.to_vec(),
                projection,
                gram_row_means,
                gram_mean,
            },
            coords,
        ))
    }

    pub fn input_dimension(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn output_dimension(&self) -> usize {
        self.projection.nrows()
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dimension(),
                got: x.len(),
            });
        }
        let kv: Vec<f64> = self.samples.iter().map(|s| self.kernel.eval(x, s)).collect();
        let mean = kv.iter().sum::<f64>() / kv.len() as f64;
        let centered: Vec<f64> = kv
            .iter()
            .zip(&self.gram_row_means)
            .map(|(k, m)| k - mean - m + self.gram_mean)
            .collect();
        Ok((0..self.output_dimension())
            .map(|i| self.projection.row(i).iter().zip(&centered).map(|(p, c)| p * c).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reconstruction_error(k: &DMatrix<f64>) -> f64 {
        let f = npt_embed(k).unwrap();
        (f.phi.transpose() * &f.phi - center_gram(k)).abs().max()
    }

    #[test]
    fn identity_gram() {
        assert!(reconstruction_error(&DMatrix::identity(6, 6)) < 1e-8);
    }

    #[test]
    fn rank_one_gram() {
        let v = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let k = &v * v.transpose();
        let f = npt_embed(&k).unwrap();
        assert_eq!(f.phi.nrows(), 1);
        assert!(reconstruction_error(&k) < 1e-8);
    }

    #[test]
    fn random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(30, 12, |_, _| rng.random::<f64>() - 0.5);
        let k = &a * a.transpose();
        assert!(reconstruction_error(&k) < 1e-8);
    }

    #[test]
    fn rejects_indefinite() {
        let k = DMatrix::from_row_slice(3, 3, &[0.0, 5.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(npt_embed(&k).is_err());
    }

    #[test]
    fn embedding_places_training_points_at_their_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..15).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let (emb, coords) = NptEmbedding::fit(&rows, KernelSpec::rbf(0.5).unwrap(), Execution::Sequential).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let e = emb.embed(r).unwrap();
            for (j, v) in e.iter().enumerate() {
                assert!((v - coords[(i, j)]).abs() < 1e-6, "{v} vs {}", coords[(i, j)]);
            }
        }
    }
}
