//! Synthetic CAN traffic and DoS-style attack injection.
//!
//! Logs produced here carry a sidecar label per frame so that serialized
//! captures stay format-pure while windows can still be labeled.

mod attack;
mod bus;

pub use attack::{inject, inject_random_id, inject_replay, inject_zero_id, label_windows, parse_scenarios, AttackKind, AttackScenario};
pub use bus::{generate_normal, BusSpec, IdSpec, DEFAULT_PERIODS_MS};

use crate::can::CanLog;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::can::CanFrame;

/// A log with one label per frame, kept aligned through sorting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledLog {
    pub log: CanLog,
    pub labels: Vec<Label>,
}

impl LabeledLog {
    pub fn new(log: CanLog, labels: Vec<Label>) -> Result<Self> {
        if log.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: log.len(),
                got: labels.len(),
            });
        }
        Ok(LabeledLog { log, labels })
    }

    /// Every frame labeled normal.
    pub fn normal(log: CanLog) -> Self {
        let labels = vec![Label::Normal; log.len()];
        LabeledLog { log, labels }
    }

    /// Stable-sorts `(frame, label)` pairs by timestamp.
    pub fn from_pairs(mut pairs: Vec<(CanFrame, Label)>, source: impl Into<String>) -> Self {
        pairs.sort_by(|a, b| a.0.timestamp.total_cmp(&b.0.timestamp));
        let (frames, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        // already sorted, so the log keeps this order
        LabeledLog {
            log: CanLog::new(frames, source),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn injected_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_anomaly()).count()
    }

    /// Merges extra labeled frames behind existing ones at equal timestamps.
    pub(crate) fn merged(&self, extra: Vec<(CanFrame, Label)>) -> Self {
        let pairs = self.log.frames().iter().cloned().zip(self.labels.iter().copied()).chain(extra).collect();
        LabeledLog::from_pairs(pairs, self.log.source.clone())
    }
}
