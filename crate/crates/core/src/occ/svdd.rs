use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{gram_self, rows_of, KernelSpec};
use super::solver::{solve_simplex_box, DualSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Minimal enclosing hypersphere in kernel feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvddModel {
    /// Coefficients of the retained support samples (all strictly positive).
    pub alphas: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub r_squared: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    /// `a'a` of the center in kernel expansion.
    pub center_norm_sq: f64,
}

/// Solves `max sum a_i K_ii - a'Ka` s.t. `sum a = 1`, `0 <= a <= C`.
pub fn solve_svdd_dual(k: &DMatrix<f64>, c: f64, options: &SolverOptions) -> Result<DualSolution> {
    let n = k.nrows();
    if c * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!("C = {c} < 1/n = {}", 1.0 / n as f64)));
    }
    let h = k * 2.0;
    let p: Vec<f64> = (0..n).map(|i| -k[(i, i)]).collect();
    solve_simplex_box(&h, &p, c, options)
}

/// Squared kernel distances of the training samples to the center.
pub fn center_distances(k: &DMatrix<f64>, alphas: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    let ka: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * alphas[j]).sum()).collect();
    let aka: f64 = alphas.iter().zip(&ka).map(|(a, v)| a * v).sum();
    (0..n).map(|i| k[(i, i)] - 2.0 * ka[i] + aka).collect()
}

pub fn svdd_fit(x: &DMatrix<f64>, c: f64, kernel: KernelSpec) -> Result<SvddModel> {
    svdd_fit_rows(&rows_of(x), c, kernel, Execution::default())
}

pub fn svdd_fit_rows(rows: &[Vec<f64>], c: f64, kernel: KernelSpec, exec: Execution) -> Result<SvddModel> {
    kernel.validate()?;
    if rows.len() < 2 {
        return Err(Error::invalid("SVDD needs at least two training samples"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("C must be > 0, got {c}")));
    }
    let k = gram_self(rows, &kernel, exec);
    let sol = solve_svdd_dual(&k, c, &SolverOptions::default())?;

    // g_i = -d_i^2 + a'Ka, so the equality multiplier fixes R^2
    let idx: Vec<usize> = (0..rows.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
    let mut center_norm_sq = 0.0;
    for &i in &idx {
        for &j in &idx {
            center_norm_sq += sol.alphas[i] * sol.alphas[j] * k[(i, j)];
        }
    }
    let mut model = SvddModel {
        alphas: idx.iter().map(|&i| sol.alphas[i]).collect(),
        support: idx.iter().map(|&i| rows[i].clone()).collect(),
        r_squared: 0.0,
        c: sol.upper.min(c),
        kernel,
        center_norm_sq,
    };
    // The radius is taken at the farthest unbounded support vector, measured
    // with the scoring expansion itself, so that every boundary sample scores
    // <= 0 exactly rather than within the solver tolerance.
    let boundary = (0..rows.len())
        .filter(|&i| sol.is_free(i))
        .map(|i| model.score(&rows[i]))
        .try_fold(f64::NEG_INFINITY, |m, d| d.map(|d| m.max(d)))?;
    model.r_squared = if boundary.is_finite() { boundary } else { center_norm_sq - sol.offset }.max(0.0);
    Ok(model)
}

impl SvddModel {
    pub fn dimension(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    /// `|phi(x) - a|^2 - R^2`: positive outside the sphere.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let cross: f64 = self.alphas.iter().zip(&self.support).map(|(a, s)| a * self.kernel.eval(x, s)).sum();
        Ok(self.kernel.self_similarity(x) - 2.0 * cross + self.center_norm_sq - self.r_squared)
    }

    /// Explicit center for the linear kernel.
    pub fn linear_center(&self) -> Option<Vec<f64>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut center = vec![0.0; self.dimension()];
        for (a, s) in self.alphas.iter().zip(&self.support) {
            for (c, v) in center.iter_mut().zip(s) {
                *c += a * v;
            }
        }
        Some(center)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_iterator(rows.len(), rows[0].len(), rows.iter().flat_map(|r| r.iter().copied()))
    }

    #[test]
    fn two_points_split_evenly() {
        let x = m(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let model = svdd_fit(&x, 1.0, KernelSpec::Linear).unwrap();
        assert!(model.alphas.iter().all(|a| (a - 0.5).abs() < 1e-9));
        assert!((model.r_squared - 1.0).abs() < 1e-9);
        // center of the two points scores -R^2
        assert!((model.score(&[1.0, 0.0]).unwrap() + model.r_squared).abs() < 1e-9);
        for r in x.row_iter() {
            let v: Vec<f64> = r.iter().copied().collect();
            assert!(model.score(&v).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn identical_points_collapse() {
        let x = DMatrix::from_element(5, 2, 0.7);
        let model = svdd_fit(&x, 1.0, KernelSpec::Linear).unwrap();
        assert!(model.r_squared.abs() < 1e-12);
        assert!(model.alphas.iter().all(|a| (a - 0.2).abs() < 1e-12));
        assert!(model.score(&[0.7, 0.8]).unwrap() > 0.0);
        assert!(model.score(&[-3.0, 0.7]).unwrap() > 0.0);
    }

    #[test]
    fn equilateral_triangle_circumradius() {
        let side = 2.0;
        let h = side * 3f64.sqrt() / 2.0;
        let x = m(&[&[0.0, 0.0], &[side, 0.0], &[side / 2.0, h]]);
        let model = svdd_fit(&x, 1.0, KernelSpec::Linear).unwrap();
        assert!(model.alphas.iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-6));
        assert!((model.r_squared.sqrt() - side / 3f64.sqrt()).abs() < 1e-6);
        let c = model.linear_center().unwrap();
        assert!((c[0] - 1.0).abs() < 1e-6 && (c[1] - h / 3.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_c() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * 3 + j) as f64);
        assert!(matches!(svdd_fit(&x, 0.05, KernelSpec::Linear), Err(Error::Infeasible(_))));
        assert!(svdd_fit(&DMatrix::zeros(1, 2), 1.0, KernelSpec::Linear).is_err());
    }

    #[test]
    fn far_point_limit_rbf() {
        let x = m(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.4, 0.3]]);
        let sigma = 0.8;
        let model = svdd_fit(&x, 1.0, KernelSpec::rbf(sigma).unwrap()).unwrap();
        let far = model.score(&[10.0 * sigma + 1.0, 10.0 * sigma + 1.0]).unwrap();
        let limit = 1.0 + model.center_norm_sq - model.r_squared;
        assert!((far - limit).abs() < 1e-12, "{far} vs {limit}");
        assert!(far > 0.0);
    }

    #[test]
    fn score_dimension_check() {
        let x = m(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let model = svdd_fit(&x, 1.0, KernelSpec::Linear).unwrap();
        assert!(model.score(&[1.0]).is_err());
    }
}
