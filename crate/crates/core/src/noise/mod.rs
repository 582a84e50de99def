//! Simulated readout noise and benchmark circuits.
//!
//! A [`Device`] holds a fixed [`NoiseSpec`], a seeded generator, and a shot
//! ledger. Each shot draws an ideal outcome, applies any gate-induced flips and
//! the pre-measurement X layer, then passes the bits through every readout
//! channel in turn by sampling the matching column. Sequential per-channel
//! draws give the same outcome law as drawing once from the composed channel.

mod channel;
mod circuit;
mod device;
mod spec;
mod xchain;

pub use channel::{compose_dense, correlated_channel, correlated_layer, state_dependent_channel, CorrelatedKind, MeasurementChannel};
pub use circuit::{ghz_cnot_schedule, ideal_ghz, Circuit, Provenance};
pub use device::{derive_seed, Device, Measurement, Mode, Phase, ShotLedger};
pub use spec::{NoiseSpec, ReadoutRates};
pub use xchain::{x_chain_expected, x_chain_experiment, XChainPoint};
