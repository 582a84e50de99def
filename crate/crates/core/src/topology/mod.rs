//! Device connectivity, patch grouping, and error-correlation maps.

mod coupling;
mod err;
mod patch;

pub use coupling::{generate_architecture, preset, Architecture, CouplingMap, Edge, PRESETS};
pub use err::{correlation_weights, err_map, local_pairs, CorrelationWeights, ErrMap};
pub use patch::{greedy_patch_plan, plan_patches, PatchPlan};
