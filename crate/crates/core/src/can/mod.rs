//! CAN frames, logs and the two on-disk traffic formats.

mod candump;
mod csvlog;

pub use candump::{parse_candump_line, read_candump};
pub use csvlog::{parse_csv_log, parse_labeled_csv_log, write_csv_log, write_labeled_csv_log, CsvSchema, IdRadix};

use crate::error::{Error, Result};

pub const MAX_STANDARD_ID: u32 = 0x7FF;
pub const MAX_EXTENDED_ID: u32 = 0x1FFF_FFFF;
pub const MAX_PAYLOAD: usize = 8;

/// One timestamped classic CAN frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CanFrame {
    pub timestamp: f64,
    pub id: u32,
    pub extended: bool,
    pub payload: Vec<u8>,
    pub channel: Option<String>,
}

impl CanFrame {
    /// Builds a frame, choosing standard addressing whenever the id fits in 11 bits.
    pub fn new(timestamp: f64, id: u32, payload: Vec<u8>) -> Result<Self> {
        Self::with_addressing(timestamp, id, id > MAX_STANDARD_ID, payload)
    }

    pub fn with_addressing(timestamp: f64, id: u32, extended: bool, payload: Vec<u8>) -> Result<Self> {
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(Error::invalid(format!("timestamp {timestamp} must be finite and >= 0")));
        }
        let max = if extended { MAX_EXTENDED_ID } else { MAX_STANDARD_ID };
        if id > max {
            return Err(Error::invalid(format!("id {id:#x} out of range (max {max:#x})")));
        }
        if payload.len() > MAX_PAYLOAD {
            return Err(Error::invalid(format!("payload of {} bytes exceeds {MAX_PAYLOAD}", payload.len())));
        }
        Ok(CanFrame {
            timestamp,
            id,
            extended,
            payload,
            channel: None,
        })
    }

    pub fn on_channel(mut self, channel: impl Into<String>) -> Self {
        self.channel = Some(channel.into());
        self
    }
}

/// A capture: frames sorted by timestamp, equal timestamps kept in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CanLog {
    frames: Vec<CanFrame>,
    pub source: String,
}

impl CanLog {
    pub fn new(mut frames: Vec<CanFrame>, source: impl Into<String>) -> Self {
        // sort_by is stable
        frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        CanLog {
            frames,
            source: source.into(),
        }
    }

    pub fn frames(&self) -> &[CanFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<CanFrame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(first, last)` timestamps, `None` for an empty log.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.frames.first()?.timestamp, self.frames.last()?.timestamp))
    }
}

/// Hex digits to bytes; `None` on odd length or a non-hex digit.
pub(crate) fn decode_hex(s: &str) -> std::result::Result<Vec<u8>, HexError> {
    let bytes = s.as_bytes();
    if bytes.len() % 2 != 0 {
        return Err(HexError::OddLength);
    }
    let mut out = Vec::with_capacity(bytes.len() / 2);
    for (i, pair) in bytes.chunks_exact(2).enumerate() {
        let hi = hex_val(pair[0]).ok_or(HexError::BadDigit(2 * i))?;
        let lo = hex_val(pair[1]).ok_or(HexError::BadDigit(2 * i + 1))?;
        out.push(hi << 4 | lo);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HexError {
    OddLength,
    BadDigit(usize),
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

pub(crate) fn encode_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02X}");
        s
    })
}
