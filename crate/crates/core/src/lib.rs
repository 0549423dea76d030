//! Fully distributed DC optimal power flow.
//!
//! Generator controllers reach economic dispatch by consensus on the
//! incremental cost, smart meters estimate line flows by propagating their
//! readings, and a constraint layer keeps predicted flows inside their limits.
//! [`engine::Simulation`] drives all of it against a simulated plant.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod constraint;
pub mod ded;
pub mod dse;
pub mod engine;
pub mod forecast;
pub mod graph;
pub mod grid;
pub mod numerics;
pub mod oracle;
pub mod plant;

mod error;

pub use error::{CaseError, ConfigError, EstimationError, NumericsError, OracleError};
