use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::can::{CanFrame, CanLog};
use crate::error::{Error, Result};

pub const DEFAULT_PERIODS_MS: [f64; 10] = [10.0, 12.0, 15.0, 20.0, 25.0, 33.0, 50.0, 66.0, 80.0, 100.0];
const DEFAULT_IDS: [u32; 10] = [0x0A6, 0x0F1, 0x130, 0x17A, 0x1D4, 0x245, 0x2B0, 0x33C, 0x3E9, 0x4F2];

/// Timestamps are quantized to the microsecond resolution of capture files.
const TIME_QUANTUM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdSpec {
    pub id: u32,
    /// Nominal period in seconds.
    pub period: f64,
    /// Uniform jitter as a fraction of the period, in `[0, 1)`.
    pub jitter: f64,
    pub payload_len: usize,
}

/// A periodic bus: each ID transmits at its own nominal period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub ids: Vec<IdSpec>,
    pub duration: f64,
    pub seed: u64,
}

impl Default for BusSpec {
    fn default() -> Self {
        BusSpec::with_duration(120.0, 0)
    }
}

impl BusSpec {
    /// The ten-ID default bus with 1% jitter.
    pub fn with_duration(duration: f64, seed: u64) -> Self {
        let ids = DEFAULT_IDS
            .iter()
            .zip(DEFAULT_PERIODS_MS)
            .map(|(&id, ms)| IdSpec {
                id,
                period: ms / 1000.0,
                jitter: 0.01,
                payload_len: 8,
            })
            .collect();
        BusSpec { ids, duration, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("bus duration must be positive"));
        }
        if self.ids.is_empty() {
            return Err(Error::invalid("bus needs at least one id"));
        }
        for (i, s) in self.ids.iter().enumerate() {
            if !(s.period > 0.0 && s.period.is_finite()) {
                return Err(Error::invalid(format!("id 0x{:X}: period must be positive", s.id)));
            }
            if !(0.0..1.0).contains(&s.jitter) {
                return Err(Error::invalid(format!("id 0x{:X}: jitter must lie in [0, 1)", s.id)));
            }
            if s.payload_len > 8 {
                return Err(Error::invalid(format!("id 0x{:X}: payload longer than 8 bytes", s.id)));
            }
            if s.id > 0x1FFF_FFFF {
                return Err(Error::invalid(format!("id 0x{:X} exceeds 29 bits", s.id)));
            }
            if self.ids[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::invalid(format!("duplicate id 0x{:X}", s.id)));
            }
        }
        Ok(())
    }
}

pub(crate) fn quantize(t: f64) -> f64 {
    (t / TIME_QUANTUM).round() * TIME_QUANTUM
}

/// Attack-free traffic: ID `i` sends at `k * period + U(-jitter, jitter) * period`,
/// clipped to `[0, duration)`. Each ID draws from its own seeded stream, so
/// adding an ID leaves the others unchanged.
pub fn generate_normal(spec: &BusSpec) -> Result<CanLog> {
    spec.validate()?;
    let mut frames = Vec::new();
    for (stream, s) in spec.ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream as u64);
        let mut k = 0u64;
        loop {
            let nominal = k as f64 * s.period;
            if nominal >= spec.duration {
                break;
            }
            k += 1;
            let offset = if s.jitter > 0.0 {
                rng.random_range(-s.jitter..s.jitter) * s.period
            } else {
                0.0
            };
            let payload: Vec<u8> = (0..s.payload_len).map(|_| rng.random()).collect();
            let t = quantize((nominal + offset).max(0.0));
            if t >= spec.duration {
                continue;
            }
            frames.push(CanFrame::with_addressing(t, s.id, s.id > 0x7FF, payload)?);
        }
    }
    Ok(CanLog::new(frames, "simulated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn exact_grid_without_jitter() {
        let spec = BusSpec {
            ids: vec![IdSpec {
                id: 0x123,
                period: 0.1,
                jitter: 0.0,
                payload_len: 4,
            }],
            duration: 1.0,
            seed: 1,
        };
        let log = generate_normal(&spec).unwrap();
        assert_eq!(log.len(), 10);
        for (k, f) in log.frames().iter().enumerate() {
            assert!((f.timestamp - k as f64 * 0.1).abs() < 1e-9);
            assert_eq!(f.payload.len(), 4);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = BusSpec::with_duration(5.0, 42);
        assert_eq!(generate_normal(&spec).unwrap(), generate_normal(&spec).unwrap());
        let other = BusSpec::with_duration(5.0, 43);
        assert_ne!(generate_normal(&spec).unwrap(), generate_normal(&other).unwrap());
    }

    #[test]
    fn mean_gap_tracks_nominal_period() {
        let spec = BusSpec::with_duration(120.0, 7);
        let log = generate_normal(&spec).unwrap();
        let mut times: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for f in log.frames() {
            times.entry(f.id).or_default().push(f.timestamp);
        }
        assert_eq!(times.len(), 10);
        for s in &spec.ids {
            let t = &times[&s.id];
            let gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            assert!((mean / s.period - 1.0).abs() < 0.01, "0x{:X}: {mean}", s.id);
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut spec = BusSpec::with_duration(0.0, 0);
        assert!(generate_normal(&spec).is_err());
        spec.duration = 1.0;
        spec.ids[1].id = spec.ids[0].id;
        assert!(spec.validate().is_err());
        let mut spec = BusSpec::default();
        spec.ids[0].period = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = BusSpec::default();
        spec.ids[0].jitter = 1.0;
        assert!(spec.validate().is_err());
    }
}
