//! Windowing and per-ID timing features.
//!
//! Each vocabulary ID contributes three values per window: mean arrival
//! frequency, mean inter-arrival interval and the spread of the intervals.
//! Payload bytes are never read.

mod extract;
mod scaler;
mod table;
mod vocab;
mod window;

pub use extract::{extract_features, extract_log, id_statistics, FeatureConfig, FeatureVector, IdStatistics, StdevMode, MIN_INTERVAL};
pub use scaler::{Scaler, STDEV_FLOOR};
pub use table::FeatureTable;
pub use vocab::{build_vocabulary, IdVocabulary};
pub use window::{segment_windows, segment_windows_with_stride, Window};
