//! Mitigation strategies under a shared shot budget.
//!
//! Every strategy receives the same [`Device`] interface and total budget,
//! decides its own split between calibration and circuit shots, and returns a
//! mitigated distribution plus the ledger of what it spent. The device
//! enforces the cap, so no strategy can overspend.
//!
//! Planned circuit counts follow the usual cost rows: Full `2^n`, Linear 2,
//! CMC four per patch group, SIM four masks, AIM one per window in each
//! phase, JIGSAW `k` global runs plus `k * floor(n/2)` pair runs. (Some cost
//! tables list SIM as `2nr + kr` and AIM as `4r`; SIM is the four-circuit method.)

mod bare;
mod cmc;
mod full;
mod invert_measure;
mod jigsaw;
mod linear;

use serde::{Deserialize, Serialize};

use crate::calibration::Distribution;
use crate::error::{Error, Result};
use crate::noise::{Circuit, Device, ShotLedger};
use crate::topology::{CouplingMap, ErrMap};

pub use bare::run_bare;
pub use cmc::{calibrate_patches, mitigate_with_patches, profile_correlations, run_cmc, PatchCalibration};
use cmc::run_cmc_err;
pub use full::run_full;
pub use invert_measure::{aim_masks, run_aim, run_sim, sim_masks, AimScore};
pub use jigsaw::{bayes_update, UpdateStats};
use jigsaw::run_jigsaw;
pub use linear::run_linear;

pub const DEFAULT_CALIBRATION_FRACTION: f64 = 0.5;
pub const FULL_MAX_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Bare,
    Full,
    Linear,
    Cmc,
    CmcErr,
    Aim,
    Sim,
    Jigsaw,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Bare,
        MethodId::Full,
        MethodId::Linear,
        MethodId::Cmc,
        MethodId::CmcErr,
        MethodId::Aim,
        MethodId::Sim,
        MethodId::Jigsaw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Bare => "bare",
            MethodId::Full => "full",
            MethodId::Linear => "linear",
            MethodId::Cmc => "cmc",
            MethodId::CmcErr => "cmc_err",
            MethodId::Aim => "aim",
            MethodId::Sim => "sim",
            MethodId::Jigsaw => "jigsaw",
        }
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_fraction() -> f64 {
    DEFAULT_CALIBRATION_FRACTION
}
fn default_separation() -> usize {
    1
}
fn default_cull() -> f64 {
    crate::calibration::DEFAULT_CULL
}
fn default_locality() -> usize {
    3
}
fn default_profile_fraction() -> f64 {
    0.25
}
fn default_err_calibration_fraction() -> f64 {
    0.25
}
fn default_aim_phase1() -> f64 {
    0.25
}
fn default_aim_top() -> usize {
    4
}
fn default_patch_count() -> usize {
    4
}
fn default_jigsaw_calibration() -> f64 {
    0.25
}
fn default_global_fraction() -> f64 {
    0.5
}

/// Method id plus its parameters. Parses from `{"method": "cmc", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum StrategyConfig {
    Bare,
    Full {
        #[serde(default = "default_fraction")]
        calibration_fraction: f64,
        /// Allow registers above the dense-inverse guard.
        #[serde(default)]
        force: bool,
    },
    Linear {
        #[serde(default = "default_fraction")]
        calibration_fraction: f64,
    },
    Cmc {
        #[serde(default = "default_separation")]
        separation: usize,
        #[serde(default = "default_cull")]
        cull: f64,
        #[serde(default = "default_fraction")]
        calibration_fraction: f64,
    },
    CmcErr {
        /// Candidate pairs lie within this distance on the coupling map.
        #[serde(default = "default_locality")]
        locality: usize,
        /// Defaults to the register size.
        #[serde(default)]
        max_edges: Option<usize>,
        #[serde(default = "default_separation")]
        separation: usize,
        #[serde(default = "default_cull")]
        cull: f64,
        #[serde(default = "default_profile_fraction")]
        profile_fraction: f64,
        #[serde(default = "default_err_calibration_fraction")]
        calibration_fraction: f64,
        /// Reuse a known map and skip profiling.
        #[serde(default)]
        err_map: Option<ErrMap>,
    },
    Aim {
        /// Share of the budget spent screening every window.
        #[serde(default = "default_aim_phase1")]
        phase1_fraction: f64,
        #[serde(default = "default_aim_top")]
        top_k: usize,
        #[serde(default)]
        score: AimScore,
    },
    Sim,
    Jigsaw {
        #[serde(default = "default_patch_count")]
        patch_count: usize,
        #[serde(default)]
        epsilon: f64,
        /// Readout-correct each pair table from four simultaneous calibration
        /// circuits per filter (the JigSaw-M variant). Off by default, which
        /// keeps the cost at `k` global plus `k * floor(n/2)` pair circuits.
        #[serde(default)]
        subset_calibration: bool,
        #[serde(default = "default_jigsaw_calibration")]
        calibration_fraction: f64,
        /// Share of circuit shots spent on the full-register runs.
        #[serde(default = "default_global_fraction")]
        global_fraction: f64,
    },
}

impl StrategyConfig {
    pub fn id(&self) -> MethodId {
        match self {
            StrategyConfig::Bare => MethodId::Bare,
            StrategyConfig::Full { .. } => MethodId::Full,
            StrategyConfig::Linear { .. } => MethodId::Linear,
            StrategyConfig::Cmc { .. } => MethodId::Cmc,
            StrategyConfig::CmcErr { .. } => MethodId::CmcErr,
            StrategyConfig::Aim { .. } => MethodId::Aim,
            StrategyConfig::Sim => MethodId::Sim,
            StrategyConfig::Jigsaw { .. } => MethodId::Jigsaw,
        }
    }

    /// Defaults for a method id.
    pub fn default_for(id: MethodId) -> Self {
        let json = format!(r#"{{"method":"{}"}}"#, id.as_str());
        serde_json::from_str(&json).unwrap_or(StrategyConfig::Bare)
    }
}

/// What a strategy sees of the experiment.
pub struct RunContext<'a> {
    pub circuit: &'a Circuit,
    pub map: &'a CouplingMap,
    pub total_shots: u64,
    /// Seed for method-internal randomness (JIGSAW pair draws).
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: MethodId,
    pub mitigated: Distribution,
    pub ledger: ShotLedger,
    pub diagnostics: Vec<String>,
}

/// Run one strategy on a fresh ledger capped at `ctx.total_shots`.
pub fn run_method(config: &StrategyConfig, ctx: &RunContext<'_>, device: &mut Device) -> Result<MethodResult> {
    if ctx.total_shots == 0 {
        return Err(Error::Budget("zero-shot budget".into()));
    }
    if device.ledger().total_shots() != 0 {
        return Err(Error::invalid("device ledger must start empty"));
    }
    device.set_budget(Some(ctx.total_shots));
    let (mitigated, diagnostics) = match *config {
        StrategyConfig::Bare => (run_bare(ctx, device)?, Vec::new()),
        StrategyConfig::Full { calibration_fraction, force } => {
            (run_full(ctx, device, calibration_fraction, force)?, Vec::new())
        }
        StrategyConfig::Linear { calibration_fraction } => (run_linear(ctx, device, calibration_fraction)?, Vec::new()),
        StrategyConfig::Cmc { separation, cull, calibration_fraction } => {
            run_cmc(ctx, device, separation, cull, calibration_fraction)?
        }
        StrategyConfig::CmcErr {
            locality,
            max_edges,
            separation,
            cull,
            profile_fraction,
            calibration_fraction,
            ref err_map,
        } => run_cmc_err(
            ctx,
            device,
            cmc::ErrParams {
                locality,
                max_edges,
                separation,
                cull,
                profile_fraction,
                calibration_fraction,
                err_map: err_map.clone(),
            },
        )?,
        StrategyConfig::Aim { phase1_fraction, top_k, score } => run_aim(ctx, device, phase1_fraction, top_k, score)?,
        StrategyConfig::Sim => (run_sim(ctx, device)?, Vec::new()),
        StrategyConfig::Jigsaw { patch_count, epsilon, subset_calibration, calibration_fraction, global_fraction } => {
            run_jigsaw(
                ctx,
                device,
                jigsaw::JigsawParams { patch_count, epsilon, subset_calibration, calibration_fraction, global_fraction },
            )?
        }
    };
    Ok(MethodResult { method: config.id(), mitigated, ledger: device.ledger().clone(), diagnostics })
}

pub(crate) fn split(total: u64, fraction: f64) -> Result<(u64, u64)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("budget fraction {fraction} outside [0, 1)")));
    }
    let cal = (total as f64 * fraction).floor() as u64;
    Ok((cal, total - cal))
}

pub(crate) fn per_circuit(shots: u64, circuits: u64, what: &str) -> Result<u64> {
    let r = shots.checked_div(circuits).unwrap_or(0);
    if r == 0 {
        return Err(Error::Budget(format!("{shots} shots cannot cover {circuits} {what} circuits")));
    }
    Ok(r)
}

/// Key with every qubit of an `n`-qubit register set.
pub fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}
