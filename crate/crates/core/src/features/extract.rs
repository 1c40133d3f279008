use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::vocab::IdVocabulary;
use super::window::{segment_windows_with_stride, Window};
use crate::can::CanLog;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::par::Execution;

/// Floor on the mean interval when repeated arrivals share one timestamp.
/// Captures carry microsecond timestamps.
pub const MIN_INTERVAL: f64 = 1e-6;

/// What the spread feature measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdevMode {
    /// Population standard deviation of consecutive inter-arrival gaps.
    #[default]
    Gaps,
    /// Population standard deviation of the raw arrival timestamps.
    Timestamps,
}

impl std::str::FromStr for StdevMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaps" => Ok(StdevMode::Gaps),
            "timestamps" => Ok(StdevMode::Timestamps),
            _ => Err(Error::invalid(format!("stdev mode must be gaps|timestamps, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window: f64,
    pub stride: f64,
    pub stdev_mode: StdevMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: 1.0,
            stride: 1.0,
            stdev_mode: StdevMode::Gaps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

/// Timing triple of one ID within one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdStatistics {
    pub frequency: f64,
    pub interval: f64,
    pub spread: f64,
}

/// Statistics over sorted arrival times. Fewer than two arrivals give
/// `(0, window_length, 0)`.
pub fn id_statistics(times: &[f64], window_length: f64, mode: StdevMode) -> IdStatistics {
    let j = times.len();
    if j < 2 {
        return IdStatistics {
            frequency: 0.0,
            interval: window_length,
            spread: 0.0,
        };
    }
    let n_gaps = (j - 1) as f64;
    let interval = ((times[j - 1] - times[0]) / n_gaps).max(MIN_INTERVAL);
    let spread = match mode {
        StdevMode::Gaps => {
            let mean = (times[j - 1] - times[0]) / n_gaps;
            let ss: f64 = times.windows(2).map(|w| (w[1] - w[0] - mean).powi(2)).sum();
            (ss / n_gaps).sqrt()
        }
        StdevMode::Timestamps => {
            let mean = times.iter().sum::<f64>() / j as f64;
            let ss: f64 = times.iter().map(|t| (t - mean).powi(2)).sum();
            (ss / j as f64).sqrt()
        }
    };
    IdStatistics {
        frequency: 1.0 / interval,
        interval,
        spread,
    }
}

/// Feature vector `[f, dt, sd]` per vocabulary slot for one window.
pub fn extract_features(window: &Window<'_>, vocab: &IdVocabulary, mode: StdevMode) -> FeatureVector {
    let mut arrivals: Vec<Vec<f64>> = vec![Vec::new(); vocab.slots()];
    for frame in window.frames {
        if let Some(slot) = vocab.slot_index(frame.id) {
            arrivals[slot].push(frame.timestamp);
        }
    }
    let mut values = Vec::with_capacity(vocab.dimension());
    for times in &arrivals {
        let s = id_statistics(times, window.length, mode);
        values.extend([s.frequency, s.interval, s.spread]);
    }
    FeatureVector { values, label: None }
}

/// Segments `log` and extracts one feature row per window.
///
/// Returns the window start times alongside the `windows x dimension` matrix.
pub fn extract_log(log: &CanLog, vocab: &IdVocabulary, config: &FeatureConfig, exec: Execution) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let windows = segment_windows_with_stride(log, config.window, config.stride)?;
    let rows = exec.map(&windows, |w| extract_features(w, vocab, config.stdev_mode).values);
    let starts = windows.iter().map(|w| w.start).collect();
    let dim = vocab.dimension();
    let matrix = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    Ok((starts, matrix))
}
