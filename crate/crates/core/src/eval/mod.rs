//! Train/test protocol, Gmean metrics and hyperparameter search.
//!
//! Anomalies are the positive class throughout: TPR is the detection rate
//! and TNR the fraction of normal windows accepted.

mod grid;
mod metrics;
mod report;
mod split;
mod synthetic;

pub use grid::{default_grid, grid_search, GridOutcome, GridRow};
pub use metrics::{config_hash, evaluate, evaluate_verdicts, gmean, Confusion, EvalReport};
pub use report::{write_results_table, write_summary_json, RESULT_COLUMNS};
pub use split::{split, Split, SplitSpec};
pub use synthetic::{attack_schedule, build_benchmark, Benchmark, BenchmarkSpec};
