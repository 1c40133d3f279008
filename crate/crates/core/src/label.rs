use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Ground-truth class of a frame or window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    RandomId,
    ZeroId,
    Replay,
    Unknown,
}

impl Label {
    pub const ATTACKS: [Label; 3] = [Label::RandomId, Label::Replay, Label::ZeroId];

    pub fn is_anomaly(self) -> bool {
        self != Label::Normal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::RandomId => "random_id",
            Label::ZeroId => "zero_id",
            Label::Replay => "replay",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "normal" => Ok(Label::Normal),
            "random_id" => Ok(Label::RandomId),
            "zero_id" => Ok(Label::ZeroId),
            "replay" => Ok(Label::Replay),
            "unknown" | "unknown-anomaly" | "anomaly" => Ok(Label::Unknown),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}
