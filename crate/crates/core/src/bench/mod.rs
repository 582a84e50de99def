//! Experiment harness: metrics, sweep configuration, the seeded runner,
//! result output and persisted calibrations.

mod config;
mod metrics;
mod output;
mod runner;
mod store;

pub use config::{ArchitectureSource, CircuitKind, ExperimentConfig, NoiseModel, OutputFormat};
pub use metrics::{one_norm, success_probability};
pub use output::{emit_results, read_json_records, RecordSink, ResultRecord, CSV_COLUMNS};
pub use runner::{run_experiment, run_experiment_to, run_experiment_with, trial_seed};
pub use store::{CalibrationStore, StorePlan, STORE_VERSION};
