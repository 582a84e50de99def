//! Calibration matrices, outcome distributions, and the patch join algebra.
//!
//! Patch matrices are estimated from counts, order-adjusted so that a qubit
//! shared by `v` patches contributes a `1/v` share of its marginal to each,
//! and kept as an ordered list of local factors. Mitigation inverts that list
//! and applies it to a distribution one sparse factor at a time.

mod counts;
mod distribution;
mod join;
mod matrix;
mod sparse;

pub use counts::{estimate_matrix, group_preparations, preparation_circuits, CountsRecord, Preparation};
pub use distribution::Distribution;
pub use join::{assemble_for_measured, join, JoinPlan, SharedQubit};
pub use matrix::{CalibrationMatrix, SharedOrder, MAX_PATCH, STOCHASTIC_TOL};
pub use sparse::{Direction, Factor, SparseCalibration, DEFAULT_CULL};
