//! CAN-bus intrusion detection from per-ID timing features and one-class
//! data description models.
//!
//! The pipeline is: parse or simulate a capture ([`can`], [`sim`]), cut it
//! into windows and extract timing features ([`features`]), train a one-class
//! model on attack-free windows only ([`occ`]) and score new windows
//! ([`eval`], [`cli`]).

pub mod can;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod label;
pub mod occ;
pub mod par;
pub mod kv;
pub mod sim;

pub use error::{Error, Result};
pub use label::Label;
pub use par::Execution;
