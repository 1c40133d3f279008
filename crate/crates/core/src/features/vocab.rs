use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::can::CanLog;
use crate::error::{Error, Result};

/// Arbitration IDs seen in normal traffic, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdVocabulary {
    ids: Vec<u32>,
    /// Adds one pseudo-ID pooling every frame whose ID is not in `ids`.
    pub include_other_bucket: bool,
}

impl IdVocabulary {
    pub fn new(mut ids: Vec<u32>, include_other_bucket: bool) -> Self {
        ids.sort_unstable();
        ids.dedup();
        IdVocabulary {
            ids,
            include_other_bucket,
        }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of feature triples.
    pub fn slots(&self) -> usize {
        self.ids.len() + usize::from(self.include_other_bucket)
    }

    pub fn dimension(&self) -> usize {
        3 * self.slots()
    }

    /// Feature index of the triple for `id`; `None` when the ID is foreign and
    /// there is no other-bucket.
    pub fn slot_index(&self, id: u32) -> Option<usize> {
        match self.ids.binary_search(&id) {
            Ok(i) => Some(i),
            Err(_) if self.include_other_bucket => Some(self.ids.len()),
            Err(_) => None,
        }
    }

    /// Column names `f_0x100,dt_0x100,sd_0x100,...` followed by the other-bucket triple.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension());
        let mut push = |tag: &str| {
            for prefix in ["f", "dt", "sd"] {
                names.push(format!("{prefix}_{tag}"));
            }
        };
        for id in &self.ids {
            push(&format!("0x{id:03X}"));
        }
        if self.include_other_bucket {
            push("other");
        }
        names
    }

    /// Inverse of [`column_names`](Self::column_names).
    pub fn from_column_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.len() % 3 != 0 {
            return Err(Error::invalid(format!("{} feature columns is not a multiple of 3", names.len())));
        }
        let mut ids = Vec::new();
        let mut other = false;
        for (k, triple) in names.chunks(3).enumerate() {
            let tag = triple[0]
                .as_ref()
                .strip_prefix("f_")
                .ok_or_else(|| Error::invalid(format!("unexpected feature column {:?}", triple[0].as_ref())))?;
            for (prefix, name) in ["dt_", "sd_"].iter().zip(&triple[1..]) {
                if name.as_ref() != format!("{prefix}{tag}") {
                    return Err(Error::invalid(format!("unexpected feature column {:?}", name.as_ref())));
                }
            }
            if tag == "other" {
                if k != names.len() / 3 - 1 {
                    return Err(Error::invalid("other-bucket columns must come last"));
                }
                other = true;
            } else {
                ids.push(parse_hex_id(tag)?);
            }
        }
        let vocab = IdVocabulary::new(ids.clone(), other);
        if vocab.ids != ids {
            return Err(Error::invalid("feature columns are not in increasing id order"));
        }
        Ok(vocab)
    }

    /// One `0x`-hex id per line, plus a final `other` line when the bucket is on.
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut text = String::new();
        for id in &self.ids {
            let _ = writeln!(text, "0x{id:03X}");
        }
        if self.include_other_bucket {
            text.push_str("other\n");
        }
        sink.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut ids = Vec::new();
        let mut other = false;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "other" {
                other = true;
            } else {
                ids.push(parse_hex_id(line)?);
            }
        }
        if ids.is_empty() {
            return Err(Error::invalid("vocabulary file lists no ids"));
        }
        Ok(IdVocabulary::new(ids, other))
    }
}

fn parse_hex_id(text: &str) -> Result<u32> {
    let digits = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")).unwrap_or(text);
    u32::from_str_radix(digits, 16).map_err(|_| Error::invalid(format!("invalid id {text:?}")))
}

/// Sorted distinct arbitration IDs of `log`.
pub fn build_vocabulary(log: &CanLog, include_other_bucket: bool) -> Result<IdVocabulary> {
    if log.is_empty() {
        return Err(Error::invalid("cannot build a vocabulary from an empty log"));
    }
    let ids = log.frames().iter().map(|f| f.id).collect();
    Ok(IdVocabulary::new(ids, include_other_bucket))
}
