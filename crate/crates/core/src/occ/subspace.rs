//! Subspace SVDD: a row-orthonormal projection `Q` (d x D) is learned jointly
//! with the hypersphere by alternating a dual solve in the projected space
//! with a gradient step on `Q`.
//!
//! The regularizer `psi = tr(Q X l l' X' Q')` decides which samples describe
//! the class variance: `Psi1` weights all samples, `Psi2` only support
//! vectors, `Psi3` weights by the dual coefficients and `Psi0` drops the term.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::kernel::{gram_self, rows_of, KernelChoice, KernelSpec};
use super::linalg::{complete_orthonormal, orthonormality_error, orthonormalize_rows, sorted_eigen};
use super::npt::NptEmbedding;
use super::solver::SolverOptions;
use super::svdd::{solve_svdd_dual, svdd_fit_rows, SvddModel};
use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    Psi0,
    Psi1,
    Psi2,
    Psi3,
}

impl Psi {
    pub const ALL: [Psi; 4] = [Psi::Psi0, Psi::Psi1, Psi::Psi2, Psi::Psi3];

    /// Sample weights `l`; `None` when the regularizer is off.
    pub fn weights(self, alphas: &[f64]) -> Option<Vec<f64>> {
        match self {
            Psi::Psi0 => None,
            Psi::Psi1 => Some(vec![1.0; alphas.len()]),
            Psi::Psi2 => Some(alphas.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect()),
            Psi::Psi3 => Some(alphas.to_vec()),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Psi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches("psi") {
            "0" => Ok(Psi::Psi0),
            "1" => Ok(Psi::Psi1),
            "2" => Ok(Psi::Psi2),
            "3" => Ok(Psi::Psi3),
            _ => Err(Error::invalid(format!("psi must be one of psi0..psi3, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionInit {
    /// Leading right singular vectors of the training matrix.
    Pca,
    Identity,
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsvddParams {
    pub d: usize,
    pub c: f64,
    pub beta: f64,
    pub psi: Psi,
    pub eta: f64,
    /// Multiplies the learning rate after every iteration.
    pub eta_decay: f64,
    pub iterations: usize,
    pub init: ProjectionInit,
    /// Non-linear variants embed the data with this kernel first.
    pub kernel: KernelChoice,
}

impl Default for SsvddParams {
    fn default() -> Self {
        SsvddParams {
            d: 10,
            c: 0.1,
            beta: 0.01,
            psi: Psi::Psi1,
            eta: 0.1,
            eta_decay: 0.95,
            iterations: 50,
            init: ProjectionInit::Pca,
            kernel: KernelChoice::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub objective: f64,
    pub orthonormality_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsvddModel {
    /// `d x D`, row-orthonormal.
    pub q: DMatrix<f64>,
    pub inner: SvddModel,
    pub params: SsvddParams,
    /// Present for the non-linear variant.
    pub embedding: Option<NptEmbedding>,
    #[serde(default)]
    pub history: Vec<IterationStats>,
}

/// `sum a_i |Qx_i|^2 - |Q X a|^2 + beta |Q X l|^2` over the rows `x_i` of `x`.
pub fn ssvdd_objective(q: &DMatrix<f64>, x: &DMatrix<f64>, alphas: &[f64], weights: Option<&[f64]>, beta: f64) -> f64 {
    let y = x * q.transpose();
    let mut value = 0.0;
    for (i, &a) in alphas.iter().enumerate() {
        value += a * y.row(i).norm_squared();
    }
    let ya = weighted_row_sum(&y, alphas);
    value -= ya.iter().map(|v| v * v).sum::<f64>();
    if let Some(l) = weights {
        let yl = weighted_row_sum(&y, l);
        value += beta * yl.iter().map(|v| v * v).sum::<f64>();
    }
    value
}

/// Analytic gradient of [`ssvdd_objective`] with respect to `Q`:
/// `2 Q (sum a_i x_i x_i' - (Xa)(Xa)') + 2 beta Q (Xl)(Xl)'`.
pub fn ssvdd_gradient(q: &DMatrix<f64>, x: &DMatrix<f64>, alphas: &[f64], weights: Option<&[f64]>, beta: f64) -> DMatrix<f64> {
    let dim = x.ncols();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (i, &a) in alphas.iter().enumerate() {
        if a != 0.0 {
            let row = x.row(i);
            m += row.transpose() * row * a;
        }
    }
    let xa = weighted_row_sum(x, alphas);
    let xa = nalgebra::DVector::from_vec(xa);
    m -= &xa * xa.transpose();
    if let Some(l) = weights {
        let xl = nalgebra::DVector::from_vec(weighted_row_sum(x, l));
        m += &xl * xl.transpose() * beta;
    }
    q * m * 2.0
}

fn weighted_row_sum(x: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.ncols()];
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            for (o, v) in out.iter_mut().zip(x.row(i).iter()) {
                *o += wi * v;
            }
        }
    }
    out
}

pub fn initial_projection(x: &DMatrix<f64>, d: usize, init: ProjectionInit) -> Result<DMatrix<f64>> {
    let dim = x.ncols();
    if d == 0 || d > dim {
        return Err(Error::invalid(format!("subspace dimension d = {d} must lie in 1..={dim}")));
    }
    Ok(match init {
        ProjectionInit::Identity => DMatrix::from_fn(d, dim, |r, c| if r == c { 1.0 } else { 0.0 }),
        ProjectionInit::Pca => {
            // right singular vectors are the eigenvectors of X'X
            let (values, vectors) = sorted_eigen(&(x.transpose() * x));
            let candidates: Vec<Vec<f64>> = (0..dim)
                .filter(|&i| values[i] > 1e-12 * values[0].max(1e-300))
                .map(|i| vectors.column(i).iter().copied().collect())
                .collect();
            complete_orthonormal(&candidates, d, dim)
        }
        ProjectionInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let candidates: Vec<Vec<f64>> = (0..d).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
            complete_orthonormal(&candidates, d, dim)
        }
    })
}

fn project_rows(x: &DMatrix<f64>, q: &DMatrix<f64>) -> Vec<Vec<f64>> {
    rows_of(&(x * q.transpose()))
}

/// Alternating optimization of the projection and the subspace hypersphere.
pub fn ssvdd_fit(x: &DMatrix<f64>, params: &SsvddParams) -> Result<SsvddModel> {
    ssvdd_fit_with(x, params, Execution::default())
}

pub fn ssvdd_fit_with(x: &DMatrix<f64>, params: &SsvddParams, exec: Execution) -> Result<SsvddModel> {
    if x.nrows() < 2 {
        return Err(Error::invalid("S-SVDD needs at least two training samples"));
    }
    if !(params.eta >= 0.0 && params.eta.is_finite() && params.beta >= 0.0 && params.beta.is_finite()) {
        return Err(Error::invalid("eta and beta must be finite and >= 0"));
    }
    let (embedding, data) = match params.kernel {
        KernelChoice::Linear => (None, x.clone()),
        choice => {
            let rows = rows_of(x);
            let kernel = choice.resolve(&rows)?;
            let (emb, coords) = NptEmbedding::fit(&rows, kernel, exec)?;
            (Some(emb), coords)
        }
    };
    if params.d > data.ncols() {
        return Err(Error::invalid(format!(
            "subspace dimension d = {} exceeds input dimension {}",
            params.d,
            data.ncols()
        )));
    }

    let mut q = initial_projection(&data, params.d, params.init)?;
    let mut eta = params.eta;
    let mut history = Vec::with_capacity(params.iterations);
    let options = SolverOptions::default();
    for iteration in 0..params.iterations {
        let rows = project_rows(&data, &q);
        let k = gram_self(&rows, &KernelSpec::Linear, exec);
        let sol = solve_svdd_dual(&k, params.c, &options)?;
        let weights = params.psi.weights(&sol.alphas);
        let grad = ssvdd_gradient(&q, &data, &sol.alphas, weights.as_deref(), params.beta);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("projection gradient at iteration {iteration}")));
        }
        q = orthonormalize_rows(&(&q - grad * eta))?;
        history.push(IterationStats {
            objective: ssvdd_objective(&q, &data, &sol.alphas, weights.as_deref(), params.beta),
            orthonormality_error: orthonormality_error(&q),
        });
        eta *= params.eta_decay;
    }

    let inner = svdd_fit_rows(&project_rows(&data, &q), params.c, KernelSpec::Linear, exec)?;
    Ok(SsvddModel {
        q,
        inner,
        params: *params,
        embedding,
        history,
    })
}

impl SsvddModel {
    pub fn dimension(&self) -> usize {
        match &self.embedding {
            Some(e) => e.input_dimension(),
            None => self.q.ncols(),
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = match &self.embedding {
            Some(e) => e.embed(x)?,
            None => {
                if x.len() != self.q.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: self.q.ncols(),
                        got: x.len(),
                    });
                }
                x.to_vec()
            }
        };
        Ok((0..self.q.nrows())
            .map(|i| self.q.row(i).iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.inner.score(&self.project(x)?)
    }
}
