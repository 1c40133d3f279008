use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in decreasing order.
pub fn sorted_eigen(s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `S^{-1/2}` of a symmetric positive definite matrix.
pub fn inverse_sqrt_spd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scatter matrix".into()));
    }
    let (values, vectors) = sorted_eigen(s);
    if let Some(&min) = values.last() {
        if !(min > 0.0) {
            return Err(Error::invalid(format!("matrix is not positive definite (min eigenvalue {min:e})")));
        }
    }
    let n = values.len();
    let scaled = DMatrix::from_fn(n, n, |r, c| vectors[(r, c)] / values[c].sqrt());
    Ok(&scaled * vectors.transpose())
}

/// Orthonormalizes the rows of `q` (Gram-Schmidt via QR, signs kept so an
/// already orthonormal input is returned unchanged up to rounding).
pub fn orthonormalize_rows(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (d, dim) = q.shape();
    if d > dim {
        return Err(Error::invalid(format!("cannot fit {d} orthonormal rows in dimension {dim}")));
    }
    let qr = q.transpose().qr();
    let basis = qr.q();
    let r = qr.r();
    let mut out = DMatrix::zeros(d, dim);
    for i in 0..d {
        if r[(i, i)].abs() < 1e-12 {
            return Err(Error::invalid("projection rows became linearly dependent"));
        }
        let sign = r[(i, i)].signum();
        for j in 0..dim {
            out[(i, j)] = sign * basis[(j, i)];
        }
    }
    Ok(out)
}

/// First `d` independent rows among `candidates`, orthonormalized; the
/// standard basis fills in when the candidates are rank deficient.
pub fn complete_orthonormal(candidates: &[Vec<f64>], d: usize, dim: usize) -> DMatrix<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    let unit = |k: usize| (0..dim).map(|j| if j == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let pool = candidates.iter().cloned().chain((0..dim).map(unit));
    for mut v in pool {
        if rows.len() == d {
            break;
        }
        for _ in 0..2 {
            for r in &rows {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            rows.push(v.iter().map(|x| x / norm).collect());
        }
    }
    DMatrix::from_fn(d, dim, |r, c| rows[r][c])
}

/// `max |Q Q' - I|`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let g = q * q.transpose();
    let d = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        let w = inverse_sqrt_spd(&s).unwrap();
        assert!((w[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((w[(1, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(w[(0, 1)].abs() < 1e-12);
        assert!(inverse_sqrt_spd(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn orthonormalize_keeps_orthonormal_input() {
        let q = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let o = orthonormalize_rows(&q).unwrap();
        assert!((&o - &q).abs().max() < 1e-12);
        let skew = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 2.0]);
        let o = orthonormalize_rows(&skew).unwrap();
        assert!(orthonormality_error(&o) < 1e-12);
    }

    #[test]
    fn completion_fills_rank_deficit() {
        let q = complete_orthonormal(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], 3, 3);
        assert!(orthonormality_error(&q) < 1e-12);
    }

    #[test]
    fn eigen_sorted() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let (v, _) = sorted_eigen(&s);
        assert_eq!(v, vec![3.0, 1.0]);
    }
}
