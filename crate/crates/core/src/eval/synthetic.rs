use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::split::{split, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, extract_log, segment_windows_with_stride, FeatureConfig, FeatureTable, IdVocabulary};
use crate::par::Execution;
use crate::sim::{generate_normal, inject, label_windows, AttackKind, AttackScenario, BusSpec, LabeledLog};

/// An end-to-end synthetic experiment: default bus traffic with flood and
/// replay episodes placed in disjoint blocks of the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub duration: f64,
    pub seed: u64,
    pub flood_rate: f64,
    /// Episodes per flood kind.
    pub flood_episodes: usize,
    pub flood_length: f64,
    pub replay_episodes: usize,
    pub replay_segment: f64,
    pub replay_repeat: usize,
    /// Episodes are placed one per block of this length.
    pub block: f64,
    pub features: FeatureConfig,
    pub other_bucket: bool,
    pub train_fraction: f64,
    /// Length of the separate log that supplies validation attacks.
    pub validation_duration: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            duration: 600.0,
            seed: 0,
            flood_rate: 500.0,
            flood_episodes: 2,
            flood_length: 10.0,
            replay_episodes: 10,
            replay_segment: 1.0,
            replay_repeat: 2,
            block: 15.0,
            features: FeatureConfig::default(),
            other_bucket: true,
            train_fraction: 0.7,
            validation_duration: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub vocab: IdVocabulary,
    pub features: FeatureConfig,
    /// Raw (unscaled) normal training windows.
    pub train: FeatureTable,
    /// Held-out normal windows plus every attacked window.
    pub test: FeatureTable,
    /// Attacked windows from an independent log, for model selection.
    pub validation_attacks: FeatureTable,
    pub log: LabeledLog,
}

impl Benchmark {
    /// Carves validation normals out of the training rows and appends the
    /// validation attacks; the test set is never touched.
    pub fn validation(&self, train_fraction: f64, seed: u64) -> Result<(FeatureTable, FeatureTable)> {
        let s = split(&self.train, &SplitSpec { train_fraction, seed })?;
        Ok((s.train, s.test.concat(&self.validation_attacks)?))
    }
}

/// Attack episodes for a log of `duration` seconds, one per randomly chosen
/// block so that episodes never overlap. Replay sources come from blocks
/// left attack-free.
pub fn attack_schedule(spec: &BenchmarkSpec, duration: f64, flood_episodes: usize, replay_episodes: usize, seed: u64) -> Result<Vec<AttackScenario>> {
    let blocks = (duration / spec.block).floor() as usize;
    let episode = spec.flood_length.max(spec.replay_segment * spec.replay_repeat as f64);
    let needed = 2 * flood_episodes + 2 * replay_episodes;
    // the first and last blocks stay clean so every window lies inside the log span
    if episode + 1.0 > spec.block || blocks < needed + 2 {
        return Err(Error::invalid(format!("{duration} s cannot hold {needed} attack blocks of {} s", spec.block)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free: Vec<usize> = (1..blocks - 1).collect();
    free.shuffle(&mut rng);
    let mut take = || free.pop().expect("enough blocks");
    let place = |rng: &mut ChaCha8Rng, block: usize, len: f64| {
        let lo = block as f64 * spec.block + 0.5;
        lo + rng.random_range(0.0..(spec.block - len - 1.0).max(f64::MIN_POSITIVE))
    };
    let mut out = Vec::new();
    for kind in [AttackKind::ZeroId, AttackKind::RandomId] {
        for _ in 0..flood_episodes {
            let start = place(&mut rng, take(), spec.flood_length);
            out.push(AttackScenario::flood(kind, spec.flood_rate, (start, start + spec.flood_length), rng.random()));
        }
    }
    for _ in 0..replay_episodes {
        let len = spec.replay_segment * spec.replay_repeat as f64;
        let start = place(&mut rng, take(), len);
        let source = place(&mut rng, take(), spec.replay_segment);
        out.push(AttackScenario::replay((source, source + spec.replay_segment), spec.replay_repeat, start));
    }
    Ok(out)
}

fn attacked_log(spec: &BenchmarkSpec, duration: f64, flood_episodes: usize, replay_episodes: usize, seed: u64) -> Result<(LabeledLog, LabeledLog)> {
    let clean = LabeledLog::normal(generate_normal(&BusSpec::with_duration(duration, seed))?);
    let mut log = clean.clone();
    for scenario in attack_schedule(spec, duration, flood_episodes, replay_episodes, seed ^ 0xA77A_C4ED)? {
        log = inject(&log, &scenario)?;
    }
    Ok((clean, log))
}

fn windows_table(log: &LabeledLog, vocab: &IdVocabulary, features: &FeatureConfig, exec: Execution) -> Result<FeatureTable> {
    let (_, x) = extract_log(&log.log, vocab, features, exec)?;
    let windows = segment_windows_with_stride(&log.log, features.window, features.stride)?;
    FeatureTable::new(vocab.clone(), x, label_windows(&log.labels, &windows))
}

pub fn build_benchmark(spec: &BenchmarkSpec, exec: Execution) -> Result<Benchmark> {
    let (clean, log) = attacked_log(spec, spec.duration, spec.flood_episodes, spec.replay_episodes, spec.seed)?;
    let vocab = build_vocabulary(&clean.log, spec.other_bucket)?;
    let table = windows_table(&log, &vocab, &spec.features, exec)?;
    let s = split(&table, &SplitSpec { train_fraction: spec.train_fraction, seed: spec.seed })?;

    let (_, vlog) = attacked_log(spec, spec.validation_duration, 1, 2, spec.seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
    let vtable = windows_table(&vlog, &vocab, &spec.features, exec)?;
    let attacks: Vec<usize> = (0..vtable.len()).filter(|&i| vtable.labels[i].is_anomaly()).collect();
    Ok(Benchmark {
        vocab,
        features: spec.features,
        train: s.train,
        test: s.test,
        validation_attacks: vtable.select(&attacks),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    #[test]
    fn benchmark_layout() {
        let spec = BenchmarkSpec {
            duration: 200.0,
            flood_episodes: 1,
            replay_episodes: 3,
            validation_duration: 120.0,
            ..Default::default()
        };
        let b = build_benchmark(&spec, Execution::Parallel).unwrap();
        assert_eq!(b.vocab.ids().len(), 10);
        assert_eq!(b.train.len() + b.test.len(), 200);
        assert!(b.train.labels.iter().all(|l| !l.is_anomaly()));
        for kind in Label::ATTACKS {
            let n = b.test.labels.iter().filter(|&&l| l == kind).count();
            assert!(n >= 2, "{kind}: {n}");
        }
        assert!(b.validation_attacks.labels.iter().all(|l| l.is_anomaly()));
        assert_eq!(b, build_benchmark(&spec, Execution::Sequential).unwrap());
        let (fit, val) = b.validation(0.8, 1).unwrap();
        assert_eq!(fit.len() + val.len(), b.train.len() + b.validation_attacks.len());
    }

    #[test]
    fn schedule_needs_room() {
        let spec = BenchmarkSpec::default();
        assert!(attack_schedule(&spec, 100.0, 2, 10, 0).is_err());
        let s = attack_schedule(&spec, 600.0, 2, 10, 0).unwrap();
        assert_eq!(s.len(), 14);
        let mut spans: Vec<(f64, f64)> = s.iter().map(|a| a.window).collect();
        spans.extend(s.iter().filter_map(|a| a.replay_segment));
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(spans.windows(2).all(|w| w[0].1 <= w[1].0));
    }
}
