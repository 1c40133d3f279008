use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{rows_of, KernelChoice};
use super::ocsvm::{ocsvm_fit_rows, OcsvmModel};
use super::subspace::{ssvdd_fit_with, ProjectionInit, Psi, SsvddModel, SsvddParams};
use super::svdd::{svdd_fit_rows, SvddModel};
use super::whiten::{ellipsoid_whitening, graph_whitening, WhitenSpec};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, IdVocabulary, Scaler};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Svdd,
    Ssvdd,
    Esvdd,
    Gesvdd,
    Ocsvm,
    Geocsvm,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::Svdd, Family::Ssvdd, Family::Esvdd, Family::Gesvdd, Family::Ocsvm, Family::Geocsvm];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Svdd => "svdd",
            Family::Ssvdd => "ssvdd",
            Family::Esvdd => "esvdd",
            Family::Gesvdd => "gesvdd",
            Family::Ocsvm => "ocsvm",
            Family::Geocsvm => "geocsvm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Family::Svdd => "SVDD",
            Family::Ssvdd => "S-SVDD",
            Family::Esvdd => "E-SVDD",
            Family::Gesvdd => "GE-SVDD",
            Family::Ocsvm => "OC-SVM",
            Family::Geocsvm => "GE-OC-SVM",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s.to_ascii_lowercase().replace(['-', '_'], ""))
            .ok_or_else(|| Error::invalid(format!("unknown model family {s:?}")))
    }
}

/// Training configuration shared by every family; fields a family does not
/// use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub kernel: KernelChoice,
    pub c: f64,
    pub nu: f64,
    /// Subspace dimension; `None` means `min(10, D)`.
    pub d: Option<usize>,
    pub beta: f64,
    pub psi: Psi,
    pub eta: f64,
    pub eta_decay: f64,
    pub iterations: usize,
    pub init: ProjectionInit,
    pub k_neighbors: usize,
    pub epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: Family::Svdd,
            kernel: KernelChoice::Linear,
            c: 0.1,
            nu: 0.1,
            d: None,
            beta: 0.01,
            psi: Psi::Psi1,
            eta: 0.1,
            eta_decay: 0.95,
            iterations: 50,
            init: ProjectionInit::Pca,
            k_neighbors: 5,
            epsilon: 1e-3,
        }
    }
}

impl ModelConfig {
    pub fn new(family: Family) -> Self {
        ModelConfig {
            family,
            ..Default::default()
        }
    }

    pub fn with_kernel(self, kernel: KernelChoice) -> Self {
        ModelConfig { kernel, ..self }
    }

    pub fn with_psi(self, psi: Psi) -> Self {
        ModelConfig { psi, ..self }
    }

    /// Row label in result tables, e.g. `S-SVDD-psi1 (rbf)`.
    pub fn tag(&self) -> String {
        let kind = if self.kernel.is_linear() { "linear" } else { "rbf" };
        match self.family {
            Family::Ssvdd => format!("S-SVDD-psi{} ({kind})", self.psi.index()),
            f => format!("{} ({kind})", f.display_name()),
        }
    }

    pub fn subspace_dimension(&self, input_dim: usize) -> usize {
        self.d.unwrap_or(10).min(input_dim).max(1)
    }
}

/// A trained one-class model operating on scaled feature vectors.
/// Positive scores are anomalous for every family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Svdd(SvddModel),
    Ssvdd(SsvddModel),
    Esvdd { whiten: WhitenSpec, inner: SvddModel },
    Gesvdd { whiten: WhitenSpec, inner: SvddModel },
    Ocsvm(OcsvmModel),
    Geocsvm { whiten: WhitenSpec, inner: OcsvmModel },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Anomaly,
}

impl Verdict {
    /// Scores of exactly zero lie on the boundary and count as normal.
    pub fn from_score(score: f64) -> Self {
        if score > 0.0 {
            Verdict::Anomaly
        } else {
            Verdict::Normal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Normal => "normal",
            Verdict::Anomaly => "anomaly",
        }
    }
}

pub fn fit(x: &DMatrix<f64>, config: &ModelConfig) -> Result<Model> {
    fit_with(x, config, Execution::default())
}

pub fn fit_with(x: &DMatrix<f64>, config: &ModelConfig, exec: Execution) -> Result<Model> {
    if x.nrows() < 2 {
        return Err(Error::invalid("need at least two training rows"));
    }
    let rows = rows_of(x);
    let whitened_rows = |spec: &WhitenSpec| spec.apply_rows(&rows);
    Ok(match config.family {
        Family::Svdd => Model::Svdd(svdd_fit_rows(&rows, config.c, config.kernel.resolve(&rows)?, exec)?),
        Family::Ocsvm => Model::Ocsvm(ocsvm_fit_rows(&rows, config.nu, config.kernel.resolve(&rows)?, exec)?),
        Family::Ssvdd => {
            let params = SsvddParams {
                d: config.subspace_dimension(x.ncols()),
                c: config.c,
                beta: config.beta,
                psi: config.psi,
                eta: config.eta,
                eta_decay: config.eta_decay,
                iterations: config.iterations,
                init: config.init,
                kernel: config.kernel,
            };
            Model::Ssvdd(ssvdd_fit_with(x, &params, exec)?)
        }
        Family::Esvdd | Family::Gesvdd => {
            let whiten = if config.family == Family::Esvdd {
                ellipsoid_whitening(x, config.epsilon)?
            } else {
                graph_whitening(x, config.k_neighbors.min(x.nrows() - 1), config.epsilon)?
            };
            let w = whitened_rows(&whiten)?;
            let inner = svdd_fit_rows(&w, config.c, config.kernel.resolve(&w)?, exec)?;
            if config.family == Family::Esvdd {
                Model::Esvdd { whiten, inner }
            } else {
                Model::Gesvdd { whiten, inner }
            }
        }
        Family::Geocsvm => {
            let whiten = graph_whitening(x, config.k_neighbors.min(x.nrows() - 1), config.epsilon)?;
            let w = whitened_rows(&whiten)?;
            let inner = ocsvm_fit_rows(&w, config.nu, config.kernel.resolve(&w)?, exec)?;
            Model::Geocsvm { whiten, inner }
        }
    })
}

impl Model {
    pub fn family(&self) -> Family {
        match self {
            Model::Svdd(_) => Family::Svdd,
            Model::Ssvdd(_) => Family::Ssvdd,
            Model::Esvdd { .. } => Family::Esvdd,
            Model::Gesvdd { .. } => Family::Gesvdd,
            Model::Ocsvm(_) => Family::Ocsvm,
            Model::Geocsvm { .. } => Family::Geocsvm,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Model::Svdd(m) => m.dimension(),
            Model::Ssvdd(m) => m.dimension(),
            Model::Esvdd { whiten, .. } | Model::Gesvdd { whiten, .. } | Model::Geocsvm { whiten, .. } => whiten.dimension(),
            Model::Ocsvm(m) => m.dimension(),
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Svdd(m) => m.score(x),
            Model::Ssvdd(m) => m.score(x),
            Model::Esvdd { whiten, inner } | Model::Gesvdd { whiten, inner } => inner.score(&whiten.apply_row(x)?),
            Model::Ocsvm(m) => m.score(x),
            Model::Geocsvm { whiten, inner } => inner.score(&whiten.apply_row(x)?),
        }
    }

    pub fn score_matrix(&self, x: &DMatrix<f64>, exec: Execution) -> Result<Vec<f64>> {
        if x.nrows() > 0 && x.ncols() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.ncols(),
            });
        }
        exec.map(&rows_of(x), |r| self.score(r)).into_iter().collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<Verdict>> {
        Ok(self.score_matrix(x, Execution::default())?.into_iter().map(Verdict::from_score).collect())
    }
}

pub const MODEL_FORMAT: &str = "canids-model";
pub const MODEL_VERSION: u32 = 1;

/// Everything needed to score raw windows: vocabulary, windowing, scaler and
/// the trained model. Persisted as one self-describing JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub features: FeatureConfig,
    pub vocab: IdVocabulary,
    pub scaler: Scaler,
    pub model: Model,
}

impl Detector {
    /// Fits the scaler on `raw` (normal rows only) and trains `config` on the scaled rows.
    pub fn train(raw: &DMatrix<f64>, vocab: IdVocabulary, features: FeatureConfig, config: ModelConfig, exec: Execution) -> Result<Self> {
        if raw.ncols() != vocab.dimension() {
            return Err(Error::DimensionMismatch {
                expected: vocab.dimension(),
                got: raw.ncols(),
            });
        }
        let scaler = Scaler::fit(raw)?;
        let model = fit_with(&scaler.transform(raw)?, &config, exec)?;
        Ok(Detector {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config,
            features,
            vocab,
            scaler,
            model,
        })
    }

    pub fn score_raw(&self, row: &[f64]) -> Result<f64> {
        self.model.score(&self.scaler.transform_row(row)?)
    }

    pub fn score_raw_matrix(&self, raw: &DMatrix<f64>, exec: Execution) -> Result<Vec<f64>> {
        self.model.score_matrix(&self.scaler.transform(raw)?, exec)
    }

    pub fn save<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer(sink, self)?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(source)?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(MODEL_FORMAT) => {}
            _ => return Err(Error::invalid("not a canids model file")),
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_VERSION) => {}
            v => return Err(Error::invalid(format!("unsupported model version {v:?}"))),
        }
        Ok(serde_json::from_value(value)?)
    }
}
