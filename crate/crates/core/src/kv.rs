//! Flat `key = value` configuration text.
//!
//! One entry per line, `#` starts a comment, `[name]` lines open a section.
//! Keys are case-insensitive and `-` is treated as `_`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    pub name: Option<String>,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Splits `text` into sections. Entries before the first header land in an
/// unnamed leading section, which is omitted when empty.
pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section::default()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: &str| Error::Config {
            line: i + 1,
            message: message.to_string(),
        };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| bad("unterminated section header"))?;
            sections.push(Section {
                name: Some(name.trim().to_string()),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(bad("empty key"));
        }
        sections.last_mut().expect("at least one section").entries.push(Entry {
            line: i + 1,
            key,
            value: value.trim().to_string(),
        });
    }
    if sections[0].entries.is_empty() && sections.len() > 1 {
        sections.remove(0);
    }
    Ok(sections)
}

impl Entry {
    pub fn error(&self, message: impl std::fmt::Display) -> Error {
        Error::Config {
            line: self.line,
            message: format!("{}: {message}", self.key),
        }
    }

    pub fn parse<T: std::str::FromStr>(&self) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value.parse::<T>().map_err(|e| self.error(e))
    }

    /// `a,b` as a pair of reals.
    pub fn pair(&self) -> Result<(f64, f64)> {
        let (a, b) = self.value.split_once(',').ok_or_else(|| self.error("expected two comma-separated values"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| self.error(e));
        Ok((num(a)?, num(b)?))
    }

    pub fn flag(&self) -> Result<bool> {
        match self.value.to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "on" => Ok(true),
            "0" | "false" | "no" | "off" => Ok(false),
            _ => Err(self.error("expected a boolean")),
        }
    }
}
