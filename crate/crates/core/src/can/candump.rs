use std::io::BufRead;

use super::{decode_hex, CanFrame, CanLog, HexError, MAX_EXTENDED_ID, MAX_PAYLOAD, MAX_STANDARD_ID};
use crate::error::{Error, Result};

fn line_error(line: &str, offset: usize, message: impl Into<String>) -> Error {
    Error::Line {
        line: line.to_string(),
        offset,
        message: message.into(),
    }
}

/// Parses one `(<sec.usec>) <iface> <ID>#<DATA>` line.
///
/// Three id digits mean standard addressing, eight mean extended, as candump
/// prints them. Remote and CAN-FD frames are rejected.
pub fn parse_candump_line(line: &str) -> Result<CanFrame> {
    let raw = line;
    let line = line.trim_end_matches(['\n', '\r']);
    let lead = line.len() - line.trim_start().len();
    let rest = &line[lead..];

    let Some(body) = rest.strip_prefix('(') else {
        return Err(line_error(raw, lead, "expected '(' before timestamp"));
    };
    let close = body
        .find(')')
        .ok_or_else(|| line_error(raw, lead, "unterminated timestamp"))?;
    let ts_text = &body[..close];
    let timestamp: f64 = ts_text
        .parse()
        .ok()
        .filter(|t: &f64| t.is_finite() && *t >= 0.0)
        .ok_or_else(|| line_error(raw, lead + 1, "malformed timestamp"))?;

    let mut pos = lead + 1 + close + 1;
    let after = &line[pos..];
    let mut fields = after.split_whitespace();
    let channel = fields
        .next()
        .ok_or_else(|| line_error(raw, pos, "missing interface"))?;
    let frame_text = fields
        .next()
        .ok_or_else(|| line_error(raw, pos, "missing frame"))?;
    if fields.next().is_some() {
        return Err(line_error(raw, pos, "trailing fields after frame"));
    }
    // byte offset of the frame token within the line
    pos = frame_text.as_ptr() as usize - line.as_ptr() as usize;

    let hash = frame_text
        .find('#')
        .ok_or_else(|| line_error(raw, pos, "missing '#' separator"))?;
    let id_text = &frame_text[..hash];
    let data_text = &frame_text[hash + 1..];
    if data_text.starts_with('#') {
        return Err(line_error(raw, pos + hash + 1, "CAN-FD frames are not supported"));
    }
    if data_text.starts_with(['R', 'r']) {
        return Err(line_error(raw, pos + hash + 1, "remote frames are not supported"));
    }

    if id_text.is_empty() || !id_text.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(line_error(raw, pos, "invalid hex id"));
    }
    let id = u32::from_str_radix(id_text, 16).map_err(|_| line_error(raw, pos, "invalid hex id"))?;
    let extended = id_text.len() > 3;
    let max = if extended { MAX_EXTENDED_ID } else { MAX_STANDARD_ID };
    if id > max || id_text.len() > 8 {
        return Err(line_error(raw, pos, format!("id {id:#x} out of range")));
    }

    let data_pos = pos + hash + 1;
    let payload = decode_hex(data_text).map_err(|e| match e {
        HexError::OddLength => line_error(raw, data_pos, "odd payload hex length"),
        HexError::BadDigit(i) => line_error(raw, data_pos + i, "invalid payload hex digit"),
    })?;
    if payload.len() > MAX_PAYLOAD {
        return Err(line_error(raw, data_pos, "payload longer than 8 bytes"));
    }

    Ok(CanFrame::with_addressing(timestamp, id, extended, payload)?.on_channel(channel))
}

/// Reads a whole candump capture. Blank lines are skipped; invalid UTF-8 is
/// replaced before parsing so it surfaces as a line error.
pub fn read_candump<R: BufRead>(mut reader: R, source: impl Into<String>) -> Result<CanLog> {
    let mut frames = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            continue;
        }
        frames.push(parse_candump_line(&line)?);
    }
    Ok(CanLog::new(frames, source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_reference_line() {
        let f = parse_candump_line("(1679000000.123456) can0 1F4#DEADBEEF").unwrap();
        assert_eq!(f.timestamp, 1679000000.123456);
        assert_eq!(f.id, 0x1F4);
        assert!(!f.extended);
        assert_eq!(f.payload, vec![0xDE, 0xAD, 0xBE, 0xEF]);
        assert_eq!(f.channel.as_deref(), Some("can0"));
    }

    #[test]
    fn empty_payload() {
        let f = parse_candump_line("(0.000000) can0 000#\n").unwrap();
        assert_eq!(f.timestamp, 0.0);
        assert_eq!(f.id, 0);
        assert!(f.payload.is_empty());
    }

    #[test]
    fn extended_id() {
        let f = parse_candump_line("(1.5) vcan1 18DAF110#0102").unwrap();
        assert!(f.extended);
        assert_eq!(f.id, 0x18DAF110);
    }

    #[test]
    fn rejections() {
        let err = parse_candump_line("(1.0) can0 GG#00").unwrap_err();
        assert!(err.to_string().contains("invalid hex id"), "{err}");
        match parse_candump_line("(1.0) can0 123#010").unwrap_err() {
            Error::Line { message, offset, .. } => {
                assert_eq!(message, "odd payload hex length");
                assert_eq!(offset, 15);
            }
            e => panic!("{e}"),
        }
        assert!(parse_candump_line("(abc) can0 123#00").is_err());
        assert!(parse_candump_line("(-1.0) can0 123#00").is_err());
        assert!(parse_candump_line("(1.0) can0 800#00").is_err());
        assert!(parse_candump_line("(1.0) can0 123#001122334455667788").is_err());
        assert!(parse_candump_line("(1.0) can0 123##100").is_err());
        assert!(parse_candump_line("(1.0) can0 123#R").is_err());
        assert!(parse_candump_line("1.0 can0 123#00").is_err());
        assert!(parse_candump_line("(1.0) can0").is_err());
    }

    #[test]
    fn reads_capture() {
        let text = "(0.2) can0 200#01\n\n(0.1) can0 100#\n";
        let log = read_candump(text.as_bytes(), "mem").unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.frames()[0].id, 0x100);
    }

    proptest! {
        #[test]
        fn never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let line = String::from_utf8_lossy(&bytes);
            let _ = parse_candump_line(&line);
        }

        #[test]
        fn never_panics_near_format(ts in "[0-9.()a-z-]{0,12}", id in "[0-9A-Fa-fxG]{0,9}", data in "[0-9A-F#R]{0,20}") {
            let _ = parse_candump_line(&format!("({ts}) can0 {id}#{data}"));
        }
    }
}
