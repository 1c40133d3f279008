//! One-class classifiers: SVDD and its subspace, ellipsoidal and
//! graph-embedded variants, plus OC-SVM, all sharing one dual solver and a
//! positive-is-anomalous score convention.

pub mod kernel;
pub mod linalg;
mod model;
pub mod npt;
pub mod ocsvm;
pub mod solver;
pub mod subspace;
pub mod svdd;
pub mod whiten;

pub use kernel::{gram_matrix, median_heuristic, KernelChoice, KernelSpec};
pub use model::{fit, fit_with, Detector, Family, Model, ModelConfig, Verdict, MODEL_FORMAT, MODEL_VERSION};
pub use npt::{npt_embed, NptEmbedding};
pub use ocsvm::{ocsvm_fit, OcsvmModel};
pub use solver::{DualSolution, SolverOptions};
pub use subspace::{ssvdd_fit, ssvdd_gradient, ssvdd_objective, ProjectionInit, Psi, SsvddModel, SsvddParams};
pub use svdd::{solve_svdd_dual, svdd_fit, SvddModel};
pub use whiten::{esvdd_fit, geocsvm_fit, gesvdd_fit, graph_laplacian, WhitenKind, WhitenSpec};
