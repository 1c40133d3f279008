//! Pairwise coordinate descent (SMO) for the simplex-box quadratic program
//!
//! ```text
//! minimize   0.5 a'Ha + p'a
//! subject to sum(a) = 1,  0 <= a_i <= upper
//! ```
//!
//! which covers both the hypersphere dual (`H = 2K`, `p = -diag(K)`) and the
//! one-class SVM dual (`H = K`, `p = 0`). Each step moves mass between one
//! pair of coordinates, so the equality constraint holds throughout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    /// `Ha + p` at the solution.
    pub gradient: Vec<f64>,
    /// Multiplier of the equality constraint: free coordinates have
    /// `gradient == offset`, coordinates at zero have `gradient >= offset`,
    /// coordinates at the upper bound have `gradient <= offset`.
    pub offset: f64,
    pub upper: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl DualSolution {
    pub fn is_free(&self, i: usize) -> bool {
        self.alphas[i] > 0.0 && self.alphas[i] < self.upper
    }
}

fn full_gradient(h: &DMatrix<f64>, p: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut g = p.to_vec();
    for (j, &aj) in a.iter().enumerate() {
        if aj != 0.0 {
            for (i, gi) in g.iter_mut().enumerate().take(n) {
                *gi += h[(i, j)] * aj;
            }
        }
    }
    g
}

/// Most violating pair `(i, j)`: mass moves from `j` to `i`. Returns the
/// pair and the violation `g_j - g_i` (0 when no pair can move).
fn select_pair(h: &DMatrix<f64>, g: &[f64], a: &[f64], upper: f64) -> (Option<(usize, usize)>, f64) {
    let n = a.len();
    let mut i_best = None;
    let mut g_min = f64::INFINITY;
    for t in 0..n {
        if a[t] < upper && g[t] < g_min {
            g_min = g[t];
            i_best = Some(t);
        }
    }
    let Some(i) = i_best else {
        return (None, 0.0);
    };
    let mut g_max = f64::NEG_INFINITY;
    let mut j_best = None;
    let mut best_gain = f64::NEG_INFINITY;
    for t in 0..n {
        if a[t] <= 0.0 {
            continue;
        }
        g_max = g_max.max(g[t]);
        let diff = g[t] - g_min;
        if diff > 0.0 {
            let curv = (h[(i, i)] + h[(t, t)] - 2.0 * h[(i, t)]).max(TAU);
            let gain = diff * diff / curv;
            if gain > best_gain {
                best_gain = gain;
                j_best = Some(t);
            }
        }
    }
    let violation = (g_max - g_min).max(0.0);
    match j_best {
        Some(j) => (Some((i, j)), violation),
        None => (None, violation),
    }
}

fn equality_offset(g: &[f64], a: &[f64], upper: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut at_upper = f64::NEG_INFINITY;
    let mut at_zero = f64::INFINITY;
    for (&gi, &ai) in g.iter().zip(a) {
        if ai > 0.0 && ai < upper {
            sum += gi;
            free += 1;
        } else if ai >= upper {
            at_upper = at_upper.max(gi);
        } else {
            at_zero = at_zero.min(gi);
        }
    }
    if free > 0 {
        sum / free as f64
    } else if at_upper.is_finite() && at_zero.is_finite() {
        0.5 * (at_upper + at_zero)
    } else if at_upper.is_finite() {
        at_upper
    } else {
        at_zero
    }
}

/// Solves the simplex-box QP starting from the uniform point `1/n`.
pub fn solve_simplex_box(h: &DMatrix<f64>, p: &[f64], upper: f64, options: &SolverOptions) -> Result<DualSolution> {
    let n = p.len();
    if n == 0 {
        return Err(Error::invalid("empty dual problem"));
    }
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.nrows(),
        });
    }
    if !(upper.is_finite() && upper * n as f64 >= 1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "upper bound {upper} admits no point with sum 1 over {n} coordinates (needs >= {})",
            1.0 / n as f64
        )));
    }
    let upper = upper.min(1.0);
    if h.iter().any(|v| !v.is_finite()) || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dual problem matrix".into()));
    }

    let mut a = vec![1.0 / n as f64; n];
    let mut g = full_gradient(h, p, &a);
    let mut iterations = 0usize;
    let mut best = f64::INFINITY;

    loop {
        let (pair, violation) = select_pair(h, &g, &a, upper);
        best = best.min(violation);
        if violation < options.tolerance || pair.is_none() {
            // refresh against accumulated drift before accepting
            let fresh = full_gradient(h, p, &a);
            let drift = fresh.iter().zip(&g).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            g = fresh;
            if drift < 0.1 * options.tolerance {
                let (_, violation) = select_pair(h, &g, &a, upper);
                return Ok(DualSolution {
                    offset: equality_offset(&g, &a, upper),
                    alphas: a,
                    gradient: g,
                    upper,
                    iterations,
                    residual: violation,
                });
            }
            continue;
        }
        if iterations >= options.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                residual: best,
            });
        }
        iterations += 1;

        let (i, j) = pair.expect("checked above");
        let curv = (h[(i, i)] + h[(j, j)] - 2.0 * h[(i, j)]).max(TAU);
        let room = (upper - a[i]).min(a[j]);
        let mut step = (g[j] - g[i]) / curv;
        if step >= room {
            step = room;
        }
        if step <= 0.0 {
            continue;
        }
        let (ai, aj) = (a[i], a[j]);
        a[i] = if step == upper - ai { upper } else { ai + step };
        a[j] = if step == aj { 0.0 } else { aj - step };
        let di = a[i] - ai;
        let dj = a[j] - aj;
        for t in 0..n {
            g[t] += h[(t, i)] * di + h[(t, j)] * dj;
        }
    }
}
