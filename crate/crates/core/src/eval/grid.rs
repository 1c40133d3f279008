use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, EvalReport};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureTable};
use crate::occ::{Detector, Family, KernelChoice, ModelConfig, Psi};
use crate::par::Execution;

const C_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
const NU_GRID: [f64; 3] = [0.05, 0.1, 0.2];
const SIGMA_SCALES: [f64; 3] = [0.5, 1.0, 2.0];
const D_GRID: [usize; 3] = [2, 5, 10];
const BETA_GRID: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// The default sweep for one family around `base`. RBF bandwidths are
/// multiples of the median heuristic; a linear base kernel stays linear.
pub fn default_grid(base: &ModelConfig) -> Vec<ModelConfig> {
    let kernels: Vec<KernelChoice> = if base.kernel.is_linear() {
        vec![KernelChoice::Linear]
    } else {
        SIGMA_SCALES.iter().map(|&scale| KernelChoice::RbfMedian { scale }).collect()
    };
    let mut out = Vec::new();
    for kernel in kernels {
        let cell = ModelConfig { kernel, ..*base };
        match base.family {
            Family::Ocsvm | Family::Geocsvm => out.extend(NU_GRID.iter().map(|&nu| ModelConfig { nu, ..cell })),
            Family::Svdd | Family::Esvdd | Family::Gesvdd => out.extend(C_GRID.iter().map(|&c| ModelConfig { c, ..cell })),
            Family::Ssvdd => {
                for c in C_GRID {
                    for d in D_GRID {
                        if base.psi == Psi::Psi0 {
                            out.push(ModelConfig { c, d: Some(d), ..cell });
                        } else {
                            out.extend(BETA_GRID.iter().map(|&beta| ModelConfig { c, d: Some(d), beta, ..cell }));
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub config: ModelConfig,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: usize,
    pub rows: Vec<GridRow>,
}

impl GridOutcome {
    pub fn best_config(&self) -> &ModelConfig {
        &self.rows[self.best].config
    }

    pub fn best_report(&self) -> &EvalReport {
        self.rows[self.best].report.as_ref().expect("best row succeeded")
    }
}

/// Prefers higher Gmean, then smaller C, d, sigma, nu and beta, then grid order.
fn rank(a: (usize, &GridRow), b: (usize, &GridRow)) -> Ordering {
    let (ra, rb) = (a.1.report.as_ref().expect("ranked rows succeeded"), b.1.report.as_ref().expect("ranked rows succeeded"));
    let (ca, cb) = (&a.1.config, &b.1.config);
    rb.gmean
        .total_cmp(&ra.gmean)
        .then(ca.c.total_cmp(&cb.c))
        .then(ca.d.unwrap_or(usize::MAX).cmp(&cb.d.unwrap_or(usize::MAX)))
        .then(ca.kernel.sigma_hint().total_cmp(&cb.kernel.sigma_hint()))
        .then(ca.nu.total_cmp(&cb.nu))
        .then(ca.beta.total_cmp(&cb.beta))
        .then(a.0.cmp(&b.0))
}

/// Exhaustive sweep: each cell trains on `train` (normal rows only) and is
/// scored on `validation`. Failed cells are recorded, not fatal. Cells are
/// independent, so the parallel result equals the sequential one.
pub fn grid_search(grid: &[ModelConfig], train: &FeatureTable, validation: &FeatureTable, features: FeatureConfig, exec: Execution) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    if train.labels.iter().any(|l| l.is_anomaly()) {
        return Err(Error::invalid("training data must be target-class only"));
    }
    let rows: Vec<GridRow> = exec.map(grid, |config| {
        let outcome = Detector::train(&train.x, train.vocab.clone(), features, *config, Execution::Sequential)
            .and_then(|det| evaluate(&det, validation, Execution::Sequential));
        match outcome {
            Ok(report) => GridRow {
                config: *config,
                report: Some(report),
                error: None,
            },
            Err(e) => GridRow {
                config: *config,
                report: None,
                error: Some(e.to_string()),
            },
        }
    });
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.report.is_some())
        .min_by(|a, b| rank(*a, *b))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid(format!("all {} grid cells failed; first error: {}", rows.len(), rows[0].error.as_deref().unwrap_or(""))))?;
    Ok(GridOutcome { best, rows })
}
