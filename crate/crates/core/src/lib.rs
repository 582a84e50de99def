//! Readout-error mitigation by coupling-map calibration.
//!
//! The crate builds per-patch calibration matrices along a device's coupling
//! map (or along a map of measured error correlations), joins them into a
//! sparse global calibration, and inverts it to correct measured outcome
//! distributions. A measurement-noise simulator and baseline mitigation
//! strategies are included so methods can be compared under equal shot
//! budgets.

pub mod bench;
pub mod bits;
pub mod calibration;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod strategies;
pub mod topology;

pub use error::{Error, Result};
