use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of normal rows used for training, in `(0, 1)`.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Training rows are always normal; every anomalous row goes to the test side.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: FeatureTable,
    pub test: FeatureTable,
}

/// Seeded random split of the normal rows; anomalies all land in `test`.
/// Both sides keep the original row order.
pub fn split(table: &FeatureTable, spec: &SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let mut normal: Vec<usize> = (0..table.len()).filter(|&i| !table.labels[i].is_anomaly()).collect();
    if normal.len() < 2 {
        return Err(Error::invalid(format!("need at least two normal rows to split, found {}", normal.len())));
    }
    let k = ((spec.train_fraction * normal.len() as f64).round() as usize).clamp(1, normal.len() - 1);
    normal.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut in_train = vec![false; table.len()];
    for &i in &normal[..k] {
        in_train[i] = true;
    }
    let train: Vec<usize> = (0..table.len()).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..table.len()).filter(|&i| !in_train[i]).collect();
    Ok(Split {
        train: table.select(&train),
        test: table.select(&test),
    })
}
