//! Covert communication over channels with action-dependent states.

pub mod analytic;
pub mod channels;
pub mod codesim;
pub mod error;
pub mod fixtures;
pub mod probkit;
pub mod regions;

pub use error::{Error, ErrorKind, Result};
