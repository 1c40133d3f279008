use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::bus::quantize;
use super::LabeledLog;
use crate::can::CanFrame;
use crate::error::{Error, Result};
use crate::features::Window;
use crate::kv::parse_sections;
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    RandomId,
    ZeroId,
    Replay,
}

impl AttackKind {
    pub fn label(self) -> Label {
        match self {
            AttackKind::RandomId => Label::RandomId,
            AttackKind::ZeroId => Label::ZeroId,
            AttackKind::Replay => Label::Replay,
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Label>()? {
            Label::RandomId => Ok(AttackKind::RandomId),
            Label::ZeroId => Ok(AttackKind::ZeroId),
            Label::Replay => Ok(AttackKind::Replay),
            _ => Err(Error::invalid(format!("{s:?} is not an attack kind"))),
        }
    }
}

/// One attack episode. Floods inject Poisson arrivals at `rate` inside
/// `window`; replay copies `replay_segment` to the window start `repeat` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub kind: AttackKind,
    /// Injected frames per second (floods only).
    pub rate: f64,
    /// Active interval `[start, end)` in seconds.
    pub window: (f64, f64),
    pub replay_segment: Option<(f64, f64)>,
    pub repeat: usize,
    pub seed: u64,
    /// Zero-ID floods carry 8 random bytes instead of an empty payload.
    pub zero_payload: bool,
}

impl AttackScenario {
    pub fn flood(kind: AttackKind, rate: f64, window: (f64, f64), seed: u64) -> Self {
        AttackScenario {
            kind,
            rate,
            window,
            replay_segment: None,
            repeat: 1,
            seed,
            zero_payload: false,
        }
    }

    /// Replays `segment` back-to-back `repeat` times starting at `start`.
    pub fn replay(segment: (f64, f64), repeat: usize, start: f64) -> Self {
        AttackScenario {
            kind: AttackKind::Replay,
            rate: 0.0,
            window: (start, start + repeat as f64 * (segment.1 - segment.0)),
            replay_segment: Some(segment),
            repeat,
            seed: 0,
            zero_payload: false,
        }
    }

    fn validate(&self, log: &LabeledLog) -> Result<()> {
        let (start, end) = self.window;
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::invalid(format!("attack window ({start}, {end}) is empty")));
        }
        let inside = |a: f64, b: f64| match log.log.span() {
            Some((first, last)) => a >= first && b <= last,
            None => true,
        };
        if !inside(start, end) {
            return Err(Error::invalid(format!("attack window ({start}, {end}) lies outside the log span")));
        }
        match self.kind {
            AttackKind::RandomId | AttackKind::ZeroId => {
                if !(self.rate > 0.0 && self.rate.is_finite()) {
                    return Err(Error::invalid("flood rate must be positive"));
                }
            }
            AttackKind::Replay => {
                let (a, b) = self.replay_segment.ok_or_else(|| Error::invalid("replay needs a source segment"))?;
                if !(a < b) || !inside(a, b) {
                    return Err(Error::invalid(format!("replay segment ({a}, {b}) is empty or outside the log span")));
                }
                if self.repeat == 0 {
                    return Err(Error::invalid("replay repeat must be at least 1"));
                }
            }
        }
        Ok(())
    }

    fn expect(&self, kind: AttackKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::invalid(format!("scenario is {:?}, expected {:?}", self.kind, kind)));
        }
        Ok(())
    }
}

fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, (start, end): (f64, f64)) -> Vec<f64> {
    let exp = Exp::new(rate).expect("rate validated");
    let mut times = Vec::new();
    let mut t = start;
    loop {
        t += exp.sample(rng);
        let q = quantize(t);
        if t >= end || q >= end {
            return times;
        }
        times.push(q.max(start));
    }
}

fn flood(log: &LabeledLog, scenario: &AttackScenario, frame: impl Fn(&mut ChaCha8Rng, f64) -> CanFrame) -> Result<LabeledLog> {
    scenario.validate(log)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let times = poisson_times(&mut rng, scenario.rate, scenario.window);
    let label = scenario.kind.label();
    let injected = times.into_iter().map(|t| (frame(&mut rng, t), label)).collect();
    Ok(log.merged(injected))
}

/// Floods random 11-bit IDs with random payloads; IDs may collide with
/// legitimate ones.
pub fn inject_random_id(log: &LabeledLog, scenario: &AttackScenario) -> Result<LabeledLog> {
    scenario.expect(AttackKind::RandomId)?;
    flood(log, scenario, |rng, t| {
        let len = rng.random_range(0..=8);
        let payload = (0..len).map(|_| rng.random()).collect();
        CanFrame::with_addressing(t, rng.random_range(0..=0x7FF), false, payload).expect("11-bit id")
    })
}

/// Floods ID 0, the highest arbitration priority.
pub fn inject_zero_id(log: &LabeledLog, scenario: &AttackScenario) -> Result<LabeledLog> {
    scenario.expect(AttackKind::ZeroId)?;
    let populated = scenario.zero_payload;
    flood(log, scenario, |rng, t| {
        let payload = if populated { (0..8).map(|_| rng.random()).collect() } else { Vec::new() };
        CanFrame::with_addressing(t, 0, false, payload).expect("id 0")
    })
}

/// Re-transmits the frames captured in the source segment, shifted to the
/// window start and repeated back-to-back with the segment's own cadence.
/// Copies falling past the window end are dropped.
pub fn inject_replay(log: &LabeledLog, scenario: &AttackScenario) -> Result<LabeledLog> {
    scenario.expect(AttackKind::Replay)?;
    scenario.validate(log)?;
    let (a, b) = scenario.replay_segment.expect("validated");
    let source: Vec<&CanFrame> = log.log.frames().iter().filter(|f| f.timestamp >= a && f.timestamp < b).collect();
    if source.is_empty() {
        return Err(Error::invalid(format!("replay segment ({a}, {b}) contains no frames")));
    }
    let (start, end) = scenario.window;
    let mut injected = Vec::new();
    for r in 0..scenario.repeat {
        let shift = start - a + r as f64 * (b - a);
        for f in &source {
            let t = f.timestamp + shift;
            if t >= end {
                break;
            }
            let mut copy = (*f).clone();
            copy.timestamp = t;
            injected.push((copy, Label::Replay));
        }
    }
    Ok(log.merged(injected))
}

pub fn inject(log: &LabeledLog, scenario: &AttackScenario) -> Result<LabeledLog> {
    match scenario.kind {
        AttackKind::RandomId => inject_random_id(log, scenario),
        AttackKind::ZeroId => inject_zero_id(log, scenario),
        AttackKind::Replay => inject_replay(log, scenario),
    }
}

/// Normal unless the window holds an injected frame; otherwise the most
/// frequent injected kind, ties going to whichever appears first.
pub fn label_windows(labels: &[Label], windows: &[Window<'_>]) -> Vec<Label> {
    windows
        .iter()
        .map(|w| {
            // (label, count, first position)
            let mut tally: Vec<(Label, usize, usize)> = Vec::new();
            for (pos, &l) in labels[w.frame_range()].iter().enumerate() {
                if !l.is_anomaly() {
                    continue;
                }
                match tally.iter_mut().find(|e| e.0 == l) {
                    Some(e) => e.1 += 1,
                    None => tally.push((l, 1, pos)),
                }
            }
            tally
                .into_iter()
                .max_by(|x, y| x.1.cmp(&y.1).then(y.2.cmp(&x.2)))
                .map_or(Label::Normal, |e| e.0)
        })
        .collect()
}

/// Reads attack scenarios from key-value text. Each `[attack]` section is
/// one scenario; keys are `kind`, `rate`, `window`, `segment`, `repeat`,
/// `seed` and `zero_payload`.
pub fn parse_scenarios(text: &str) -> Result<Vec<AttackScenario>> {
    let mut out = Vec::new();
    for section in parse_sections(text)? {
        let mut kind = None;
        let mut s = AttackScenario::flood(AttackKind::ZeroId, 0.0, (0.0, 0.0), 0);
        for e in &section.entries {
            match e.key.as_str() {
                "kind" => kind = Some(e.parse::<AttackKind>()?),
                "rate" => s.rate = e.parse()?,
                "window" => s.window = e.pair()?,
                "segment" | "replay_segment" => s.replay_segment = Some(e.pair()?),
                "repeat" => s.repeat = e.parse()?,
                "seed" => s.seed = e.parse()?,
                "zero_payload" => s.zero_payload = e.flag()?,
                _ => return Err(e.error("unknown scenario key")),
            }
        }
        s.kind = kind.ok_or_else(|| Error::invalid("scenario without kind"))?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_vocabulary, extract_features, segment_windows, StdevMode};
    use crate::sim::{generate_normal, BusSpec};

    fn base(duration: f64, seed: u64) -> LabeledLog {
        LabeledLog::normal(generate_normal(&BusSpec::with_duration(duration, seed)).unwrap())
    }

    #[test]
    fn random_id_flood_count_and_window() {
        let log = base(10.0, 1);
        let mut total = 0;
        for seed in 0..10 {
            let s = AttackScenario::flood(AttackKind::RandomId, 1000.0, (2.0, 3.0), seed);
            let out = inject_random_id(&log, &s).unwrap();
            let n = out.injected_count();
            assert_eq!(out.len(), log.len() + n);
            assert!((850..=1150).contains(&n), "{n}");
            total += n;
            for (f, l) in out.log.frames().iter().zip(&out.labels) {
                if l.is_anomaly() {
                    assert!(f.timestamp >= 2.0 && f.timestamp < 3.0);
                    assert!(f.id <= 0x7FF && f.payload.len() <= 8);
                }
            }
            assert_eq!(out, inject_random_id(&log, &s).unwrap());
        }
        let mean = total as f64 / 10.0;
        assert!((900.0..=1100.0).contains(&mean));
    }

    #[test]
    fn empty_base_gives_only_injected() {
        let s = AttackScenario::flood(AttackKind::ZeroId, 500.0, (0.0, 2.0), 3);
        let out = inject_zero_id(&LabeledLog::default(), &s).unwrap();
        assert!(out.labels.iter().all(|&l| l == Label::ZeroId));
        assert!((850..=1150).contains(&out.len()));
        assert!(out.log.frames().iter().all(|f| f.id == 0 && f.payload.is_empty()));
    }

    #[test]
    fn zero_payload_flag_populates() {
        let mut s = AttackScenario::flood(AttackKind::ZeroId, 50.0, (0.0, 1.0), 3);
        s.zero_payload = true;
        let out = inject_zero_id(&LabeledLog::default(), &s).unwrap();
        assert!(out.log.frames().iter().all(|f| f.payload.len() == 8));
    }

    #[test]
    fn base_frames_preserved() {
        let log = base(5.0, 2);
        let out = inject(&log, &AttackScenario::flood(AttackKind::RandomId, 300.0, (1.0, 4.0), 9)).unwrap();
        let kept: Vec<&CanFrame> = out.log.frames().iter().zip(&out.labels).filter(|(_, l)| !l.is_anomaly()).map(|(f, _)| f).collect();
        assert_eq!(kept, log.log.frames().iter().collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_scenarios() {
        let log = base(5.0, 2);
        assert!(inject(&log, &AttackScenario::flood(AttackKind::ZeroId, 10.0, (4.0, 9.0), 0)).is_err());
        assert!(inject(&log, &AttackScenario::flood(AttackKind::ZeroId, 0.0, (1.0, 2.0), 0)).is_err());
        assert!(inject_replay(&log, &AttackScenario::flood(AttackKind::ZeroId, 1.0, (1.0, 2.0), 0)).is_err());
        assert!(inject(&log, &AttackScenario::replay((2.0, 2.0), 1, 3.0)).is_err());
        // a segment between two frames of a sparse log is empty
        let sparse = LabeledLog::normal(crate::can::CanLog::new(
            vec![CanFrame::new(0.0, 1, vec![]).unwrap(), CanFrame::new(4.0, 1, vec![]).unwrap()],
            "t",
        ));
        assert!(inject(&sparse, &AttackScenario::replay((1.0, 2.0), 1, 2.0)).is_err());
    }

    #[test]
    fn replay_single_frame_three_times() {
        let frames = (0..10).map(|i| CanFrame::new(i as f64, 0x10, vec![i as u8]).unwrap()).collect();
        let log = LabeledLog::normal(crate::can::CanLog::new(frames, "t"));
        let out = inject(&log, &AttackScenario::replay((3.0, 4.0), 3, 5.5)).unwrap();
        let copies: Vec<&CanFrame> = out.log.frames().iter().zip(&out.labels).filter(|(_, l)| **l == Label::Replay).map(|(f, _)| f).collect();
        assert_eq!(copies.len(), 3);
        assert!(copies.iter().all(|f| f.payload == vec![3]));
        assert_eq!(copies.iter().map(|f| f.timestamp).collect::<Vec<_>>(), vec![5.5, 6.5, 7.5]);
    }

    #[test]
    fn replay_preserves_gaps() {
        let log = base(10.0, 4);
        let out = inject(&log, &AttackScenario::replay((2.0, 3.0), 1, 6.0)).unwrap();
        let src: Vec<f64> = log.log.frames().iter().map(|f| f.timestamp).filter(|&t| (2.0..3.0).contains(&t)).collect();
        let inj: Vec<f64> = out.log.frames().iter().zip(&out.labels).filter(|(_, l)| l.is_anomaly()).map(|(f, _)| f.timestamp).collect();
        assert_eq!(src.len(), inj.len());
        for (s, i) in src.windows(2).zip(inj.windows(2)) {
            assert!(((s[1] - s[0]) - (i[1] - i[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn replay_doubles_frequency() {
        let log = base(10.0, 5);
        let vocab = build_vocabulary(&log.log, true).unwrap();
        let out = inject(&log, &AttackScenario::replay((2.0, 3.0), 1, 6.0)).unwrap();
        let clean = segment_windows(&log.log, 1.0).unwrap();
        let attacked = segment_windows(&out.log, 1.0).unwrap();
        let f0 = extract_features(&clean[6], &vocab, StdevMode::Gaps).values;
        let f1 = extract_features(&attacked[6], &vocab, StdevMode::Gaps).values;
        for slot in 0..vocab.ids().len() {
            let ratio = f1[3 * slot] / f0[3 * slot];
            assert!((ratio - 2.0).abs() < 0.25, "slot {slot}: {ratio}");
        }
        assert_eq!(label_windows(&out.labels, &attacked)[6], Label::Replay);
        assert_eq!(label_windows(&out.labels, &attacked)[5], Label::Normal);
    }

    #[test]
    fn window_labels() {
        let log = base(10.0, 6);
        let out = inject(&log, &AttackScenario::flood(AttackKind::ZeroId, 500.0, (2.0, 5.0), 1)).unwrap();
        let windows = segment_windows(&out.log, 1.0).unwrap();
        let labels = label_windows(&out.labels, &windows);
        assert_eq!(labels[0], Label::Normal);
        assert_eq!(labels[3], Label::ZeroId);
        assert_eq!(labels[9], Label::Normal);
    }

    #[test]
    fn straddling_single_injected_frame_and_ties() {
        let f = |t: f64, id| CanFrame::new(t, id, vec![]).unwrap();
        let log = crate::can::CanLog::new(vec![f(0.0, 1), f(0.5, 0), f(0.6, 2), f(0.7, 3), f(1.5, 1)], "t");
        let labels = vec![Label::Normal, Label::Replay, Label::RandomId, Label::RandomId, Label::Normal];
        let windows = segment_windows(&log, 1.0).unwrap();
        assert_eq!(label_windows(&labels, &windows), vec![Label::RandomId, Label::Normal]);
        let tie = vec![Label::Normal, Label::ZeroId, Label::RandomId, Label::Normal, Label::Normal];
        assert_eq!(label_windows(&tie, &windows)[0], Label::ZeroId);
        let one = vec![Label::Normal, Label::Normal, Label::Normal, Label::Normal, Label::Replay];
        assert_eq!(label_windows(&one, &windows)[1], Label::Replay);
    }

    #[test]
    fn scenario_file() {
        let text = "[attack]\nkind = zero_id\nrate = 500\nwindow = 1, 3\nseed = 4\n\n[attack]\nkind = replay\nsegment = 0,1\nrepeat = 2\nwindow = 5, 7\n";
        let s = parse_scenarios(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], AttackScenario::flood(AttackKind::ZeroId, 500.0, (1.0, 3.0), 4));
        assert_eq!(s[1].kind, AttackKind::Replay);
        assert_eq!(s[1].replay_segment, Some((0.0, 1.0)));
        assert_eq!(s[1].repeat, 2);
        assert!(parse_scenarios("rate = 3\n").is_err());
        assert!(parse_scenarios("kind = normal\n").is_err());
        assert!(parse_scenarios("kind = replay\ncolour = red\n").is_err());
    }
}
