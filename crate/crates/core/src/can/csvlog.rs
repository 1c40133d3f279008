use std::io::{Read, Write};

use super::{decode_hex, encode_hex, CanFrame, CanLog, HexError, MAX_STANDARD_ID};
use crate::error::{Error, Result};
use crate::label::Label;

/// How the id column is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdRadix {
    /// `0x`-prefixed values are hex, everything else decimal.
    #[default]
    Auto,
    Hex,
    Decimal,
}

/// Maps CSV column names onto frame fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub timestamp: String,
    pub id: String,
    pub payload: String,
    /// When present, checked against the payload length.
    pub dlc: Option<String>,
    /// Optional per-frame ground-truth column.
    pub label: Option<String>,
    pub id_radix: IdRadix,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            timestamp: "timestamp".into(),
            id: "id".into(),
            payload: "payload".into(),
            dlc: Some("dlc".into()),
            label: Some("label".into()),
            id_radix: IdRadix::Auto,
        }
    }
}

fn row_err(row: usize, message: impl Into<String>) -> Error {
    Error::Row {
        row,
        message: message.into(),
    }
}

fn parse_id(text: &str, radix: IdRadix, row: usize) -> Result<(u32, bool)> {
    let text = text.trim();
    let hex_body = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X"));
    let (digits, base) = match (radix, hex_body) {
        (IdRadix::Decimal, _) => (text, 10),
        (_, Some(body)) => (body, 16),
        (IdRadix::Hex, None) => (text, 16),
        (IdRadix::Auto, None) => (text, 10),
    };
    let id = u32::from_str_radix(digits, base).map_err(|_| row_err(row, format!("invalid id {text:?}")))?;
    // eight hex digits mark extended addressing even for small ids
    let extended = id > MAX_STANDARD_ID || (base == 16 && digits.len() > 3);
    Ok((id, extended))
}

/// Parses a CSV capture and any per-frame labels, sorted together by timestamp.
///
/// Frames without a label column are marked [`Label::Normal`].
pub fn parse_labeled_csv_log<R: Read>(stream: R, schema: &CsvSchema) -> Result<(CanLog, Vec<Label>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(stream);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |name: &str| Error::invalid(format!("missing column {name:?}"));

    let ts_col = column(&schema.timestamp).ok_or_else(|| missing(&schema.timestamp))?;
    let id_col = column(&schema.id).ok_or_else(|| missing(&schema.id))?;
    let payload_col = column(&schema.payload).ok_or_else(|| missing(&schema.payload))?;
    let dlc_col = schema.dlc.as_deref().and_then(column);
    let label_col = schema.label.as_deref().and_then(column);

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                row_err(row, format!("expected {expected_len} fields, found {len}"))
            }
            _ => row_err(row, e.to_string()),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();

        let ts_text = field(ts_col);
        let timestamp: f64 = ts_text
            .parse()
            .map_err(|_| row_err(row, format!("invalid timestamp {ts_text:?}")))?;
        if !timestamp.is_finite() {
            return Err(row_err(row, format!("unsortable timestamp {ts_text:?}")));
        }
        let (id, extended) = parse_id(field(id_col), schema.id_radix, row)?;
        let payload = decode_hex(field(payload_col)).map_err(|e| match e {
            HexError::OddLength => row_err(row, "odd payload hex length"),
            HexError::BadDigit(_) => row_err(row, "invalid payload hex"),
        })?;
        if let Some(c) = dlc_col {
            let dlc: usize = field(c).parse().map_err(|_| row_err(row, "invalid dlc"))?;
            if dlc != payload.len() {
                return Err(row_err(row, format!("dlc {dlc} does not match payload length {}", payload.len())));
            }
        }
        let label = match label_col {
            Some(c) => field(c).parse::<Label>().map_err(|e| row_err(row, e.to_string()))?,
            None => Label::Normal,
        };
        let frame = CanFrame::with_addressing(timestamp, id, extended, payload).map_err(|e| row_err(row, e.to_string()))?;
        rows.push((frame, label));
    }

    rows.sort_by(|a, b| a.0.timestamp.total_cmp(&b.0.timestamp));
    let (frames, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    // already sorted, CanLog::new keeps the order
    Ok((CanLog::new(frames, "csv"), labels))
}

pub fn parse_csv_log<R: Read>(stream: R, schema: &CsvSchema) -> Result<CanLog> {
    parse_labeled_csv_log(stream, schema).map(|(log, _)| log)
}

fn format_id(frame: &CanFrame) -> String {
    if frame.extended {
        format!("0x{:08X}", frame.id)
    } else {
        format!("0x{:03X}", frame.id)
    }
}

fn write_rows<W: Write>(log: &CanLog, labels: Option<&[Label]>, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    if labels.is_some() {
        w.write_record(["timestamp", "id", "dlc", "payload", "label"])?;
    } else {
        w.write_record(["timestamp", "id", "dlc", "payload"])?;
    }
    for (i, f) in log.frames().iter().enumerate() {
        let ts = format!("{:.6}", f.timestamp);
        let id = format_id(f);
        let dlc = f.payload.len().to_string();
        let payload = encode_hex(&f.payload);
        match labels {
            Some(l) => w.write_record([ts.as_str(), &id, &dlc, &payload, l[i].as_str()])?,
            None => w.write_record([ts.as_str(), &id, &dlc, &payload])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `timestamp,id,dlc,payload` with microsecond timestamps and `0x` ids.
pub fn write_csv_log<W: Write>(log: &CanLog, sink: W) -> Result<()> {
    write_rows(log, None, sink)
}

/// Same as [`write_csv_log`] plus a trailing `label` column.
pub fn write_labeled_csv_log<W: Write>(log: &CanLog, labels: &[Label], sink: W) -> Result<()> {
    if labels.len() != log.len() {
        return Err(Error::DimensionMismatch {
            expected: log.len(),
            got: labels.len(),
        });
    }
    write_rows(log, Some(labels), sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema() -> CsvSchema {
        CsvSchema::default()
    }

    #[test]
    fn direct_mapping() {
        let text = "timestamp,id,payload\n0.0,0x100,0102\n0.01,0x200,\n";
        let log = parse_csv_log(text.as_bytes(), &schema()).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.frames()[0].id, 0x100);
        assert_eq!(log.frames()[0].payload, vec![1, 2]);
        assert_eq!(log.frames()[1].id, 0x200);
        assert!(log.frames()[1].payload.is_empty());
    }

    #[test]
    fn resorts_rows() {
        let text = "timestamp,id,payload\n0.5,1,\n0.1,2,\n";
        let log = parse_csv_log(text.as_bytes(), &schema()).unwrap();
        let ts: Vec<f64> = log.frames().iter().map(|f| f.timestamp).collect();
        assert_eq!(ts, vec![0.1, 0.5]);
    }

    #[test]
    fn row_errors() {
        let err = parse_csv_log("timestamp,id,payload\n0.0,0x100,010\n".as_bytes(), &schema()).unwrap_err();
        match err {
            Error::Row { row, message } => {
                assert_eq!(row, 1);
                assert_eq!(message, "odd payload hex length");
            }
            e => panic!("{e}"),
        }
        let err = parse_csv_log("timestamp,payload\n0.0,00\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("missing column"));
        let err = parse_csv_log("timestamp,id,payload\n0.0,1,00\n0.1,2\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err}");
        let err = parse_csv_log("timestamp,id,payload\nNaN,1,00\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("unsortable"));
        let err = parse_csv_log("timestamp,id,dlc,payload\n0,1,2,00\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("dlc"));
    }

    #[test]
    fn radix_handling() {
        let text = "timestamp,id,payload\n0,256,\n0,0x100,\n";
        let log = parse_csv_log(text.as_bytes(), &schema()).unwrap();
        assert!(log.frames().iter().all(|f| f.id == 0x100));
        let hex = CsvSchema {
            id_radix: IdRadix::Hex,
            ..schema()
        };
        let log = parse_csv_log("timestamp,id,payload\n0,100,\n".as_bytes(), &hex).unwrap();
        assert_eq!(log.frames()[0].id, 0x100);
    }

    #[test]
    fn empty_log_writes_header_only() {
        let mut out = Vec::new();
        write_csv_log(&CanLog::default(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "timestamp,id,dlc,payload\n");
    }

    #[test]
    fn single_frame_roundtrip() {
        let log = CanLog::new(vec![CanFrame::new(1.25, 0x1F4, vec![0xDE, 0xAD]).unwrap()], "csv");
        let mut out = Vec::new();
        write_csv_log(&log, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "timestamp,id,dlc,payload\n1.250000,0x1F4,2,DEAD\n");
        assert_eq!(parse_csv_log(out.as_slice(), &schema()).unwrap(), log);
    }

    #[test]
    fn labels_travel_with_frames() {
        let text = "timestamp,id,dlc,payload,label\n0.2,0x000,0,,zero_id\n0.1,0x100,0,,normal\n";
        let (log, labels) = parse_labeled_csv_log(text.as_bytes(), &schema()).unwrap();
        assert_eq!(log.frames()[0].id, 0x100);
        assert_eq!(labels, vec![Label::Normal, Label::ZeroId]);
    }

    fn arb_frame() -> impl Strategy<Value = CanFrame> {
        (0u64..10_000_000_000, any::<bool>(), any::<u32>(), proptest::collection::vec(any::<u8>(), 0..=8)).prop_map(
            |(us, ext, id, payload)| {
                let id = if ext { id & 0x1FFF_FFFF } else { id & 0x7FF };
                CanFrame::with_addressing(us as f64 / 1e6, id, ext, payload).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn write_parse_identity(frames in proptest::collection::vec(arb_frame(), 0..40)) {
            let log = CanLog::new(frames, "csv");
            let mut out = Vec::new();
            write_csv_log(&log, &mut out).unwrap();
            let back = parse_csv_log(out.as_slice(), &schema()).unwrap();
            prop_assert_eq!(back.len(), log.len());
            for (a, b) in log.frames().iter().zip(back.frames()) {
                prop_assert!((a.timestamp - b.timestamp).abs() < 5e-7);
                prop_assert_eq!(a.id, b.id);
                prop_assert_eq!(a.extended, b.extended);
                prop_assert_eq!(&a.payload, &b.payload);
            }
        }

        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse_csv_log(bytes.as_slice(), &schema());
        }
    }
}
