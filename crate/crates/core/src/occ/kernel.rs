use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        let k = KernelSpec::Rbf { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::invalid(format!("rbf sigma must be > 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// `K(x, x)`.
    #[inline]
    pub fn self_similarity(&self, a: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => a.iter().map(|x| x * x).sum(),
            KernelSpec::Rbf { .. } => 1.0,
        }
    }
}

/// Kernel selection before it is bound to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    /// Fixed bandwidth.
    Rbf { sigma: f64 },
    /// `scale` times the median pairwise distance of the data the kernel sees.
    RbfMedian { scale: f64 },
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice::Linear
    }
}

impl KernelChoice {
    pub fn is_linear(&self) -> bool {
        matches!(self, KernelChoice::Linear)
    }

    pub fn resolve(&self, rows: &[Vec<f64>]) -> Result<KernelSpec> {
        match *self {
            KernelChoice::Linear => Ok(KernelSpec::Linear),
            KernelChoice::Rbf { sigma } => KernelSpec::rbf(sigma),
            KernelChoice::RbfMedian { scale } => KernelSpec::rbf(scale * median_heuristic(rows)),
        }
    }

    /// Bandwidth used for tie-breaking in grid search; 0 for linear.
    pub fn sigma_hint(&self) -> f64 {
        match *self {
            KernelChoice::Linear => 0.0,
            KernelChoice::Rbf { sigma } => sigma,
            KernelChoice::RbfMedian { scale } => scale,
        }
    }
}

pub fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Median pairwise Euclidean distance; 1.0 when every pair coincides.
pub fn median_heuristic(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d.push(d2.sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if median > 0.0 && median.is_finite() {
        median
    } else {
        1.0
    }
}

/// `K[i][j] = k(x_i, y_j)` over row samples.
pub fn gram_rows(x: &[Vec<f64>], y: &[Vec<f64>], kernel: &KernelSpec, exec: Execution) -> DMatrix<f64> {
    let rows = exec.map(x, |a| y.iter().map(|b| kernel.eval(a, b)).collect::<Vec<f64>>());
    DMatrix::from_fn(x.len(), y.len(), |i, j| rows[i][j])
}

/// Symmetric gram of one sample set; each pair is evaluated once.
pub fn gram_self(x: &[Vec<f64>], kernel: &KernelSpec, exec: Execution) -> DMatrix<f64> {
    let n = x.len();
    let upper = exec.map_range(n, |i| (i..n).map(|j| kernel.eval(&x[i], &x[j])).collect::<Vec<f64>>());
    DMatrix::from_fn(n, n, |i, j| if i <= j { upper[i][j - i] } else { upper[j][i - j] })
}

pub fn gram_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    Ok(gram_rows(&rows_of(x), &rows_of(y), kernel, Execution::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rbf_identity_entry() {
        let x = DMatrix::from_row_slice(1, 3, &[0.3, -1.0, 2.0]);
        let k = gram_matrix(&x, &x, &KernelSpec::rbf(0.7).unwrap()).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
    }

    #[test]
    fn linear_identity() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(gram_matrix(&i2, &i2, &KernelSpec::Linear).unwrap(), i2);
    }

    #[test]
    fn rbf_value() {
        let x = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let y = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let k = gram_matrix(&x, &y, &KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert!((k[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k[(0, 0)] - 0.36787944117144233).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(2, 3);
        assert!(gram_matrix(&a, &b, &KernelSpec::Linear).is_err());
    }

    #[test]
    fn self_gram_is_psd_and_matches_cross_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
        for kernel in [KernelSpec::Linear, KernelSpec::rbf(0.8).unwrap()] {
            let k = gram_self(&rows, &kernel, Execution::Parallel);
            assert_eq!(k, gram_rows(&rows, &rows, &kernel, Execution::Sequential));
            let sym = (&k + k.transpose()) * 0.5;
            let min = SymmetricEigen::new(sym).eigenvalues.min();
            assert!(min >= -1e-8, "min eigenvalue {min}");
        }
    }

    #[test]
    fn median_of_three_collinear_points() {
        let rows = vec![vec![0.0], vec![1.0], vec![3.0]];
        // distances {1, 3, 2}
        assert_eq!(median_heuristic(&rows), 2.0);
        assert_eq!(median_heuristic(&[vec![1.0], vec![1.0]]), 1.0);
    }
}
