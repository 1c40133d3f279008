use crate::can::{CanFrame, CanLog};
use crate::error::{Error, Result};

/// A contiguous run of frames with `start <= t < start + length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<'a> {
    pub start: f64,
    pub length: f64,
    /// Set on trailing windows whose end lies past the last frame of the log.
    pub partial: bool,
    /// Index of `frames[0]` within the source log.
    pub offset: usize,
    pub frames: &'a [CanFrame],
}

impl Window<'_> {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn frame_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.frames.len()
    }
}

/// Non-overlapping windows tiling `[t_first, t_last]`.
pub fn segment_windows(log: &CanLog, length: f64) -> Result<Vec<Window<'_>>> {
    segment_windows_with_stride(log, length, length)
}

/// Windows of `length` seconds starting every `stride` seconds from the first
/// frame. With `stride == length` every frame lands in exactly one window.
pub fn segment_windows_with_stride(log: &CanLog, length: f64, stride: f64) -> Result<Vec<Window<'_>>> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid(format!("window length must be > 0, got {length}")));
    }
    if !(stride > 0.0 && stride.is_finite()) {
        return Err(Error::invalid(format!("window stride must be > 0, got {stride}")));
    }
    let Some((first, last)) = log.span() else {
        return Ok(Vec::new());
    };
    let frames = log.frames();
    let tumbling = stride == length;
    let lower = |t: f64| frames.partition_point(|f| f.timestamp < t);

    let mut windows = Vec::new();
    let mut k = 0u64;
    loop {
        let start = first + k as f64 * stride;
        if start > last {
            break;
        }
        // adjacent tumbling windows share the exact same boundary value
        let end = if tumbling {
            first + (k + 1) as f64 * stride
        } else {
            start + length
        };
        let lo = lower(start);
        let hi = lower(end);
        windows.push(Window {
            start,
            length,
            partial: end > last,
            offset: lo,
            frames: &frames[lo..hi],
        });
        k += 1;
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_at(times: &[f64]) -> CanLog {
        CanLog::new(times.iter().map(|&t| CanFrame::new(t, 1, vec![]).unwrap()).collect(), "t")
    }

    #[test]
    fn tiling_with_partial_tail() {
        let times: Vec<f64> = (0..35).map(|i| i as f64 * 0.1).collect();
        let log = log_at(&times);
        let w = segment_windows(&log, 1.0).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w[3].partial);
        assert!(w[..3].iter().all(|w| !w.partial));
        assert_eq!(w.iter().map(|w| w.frames.len()).sum::<usize>(), 35);
        for win in &w {
            assert!(win.frames.iter().all(|f| f.timestamp >= win.start && f.timestamp < win.end()));
        }
    }

    #[test]
    fn empty_and_invalid() {
        assert!(segment_windows(&CanLog::default(), 1.0).unwrap().is_empty());
        assert!(segment_windows(&log_at(&[0.0]), 0.0).is_err());
        assert!(segment_windows(&log_at(&[0.0]), -1.0).is_err());
        assert!(segment_windows_with_stride(&log_at(&[0.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn sliding_windows_overlap() {
        let log = log_at(&[0.0, 0.5, 1.0, 1.5, 2.0]);
        let w = segment_windows_with_stride(&log, 1.0, 0.5).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w[1].frames.len(), 2);
        assert_eq!(w[1].offset, 1);
    }

    #[test]
    fn empty_windows_inside_gaps() {
        let log = log_at(&[0.0, 5.5]);
        let w = segment_windows(&log, 1.0).unwrap();
        assert_eq!(w.len(), 6);
        assert!(w[1..5].iter().all(|w| w.frames.is_empty()));
        assert_eq!(w[5].frame_range(), 1..2);
    }
}
