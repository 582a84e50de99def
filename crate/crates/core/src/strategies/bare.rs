use super::RunContext;
use crate::calibration::Distribution;
use crate::error::Result;
use crate::noise::{Device, Phase};

/// The whole budget on the circuit, no correction.
pub fn run_bare(ctx: &RunContext<'_>, device: &mut Device) -> Result<Distribution> {
    Ok(device.run_all(ctx.circuit, ctx.total_shots, Phase::Circuit)?.distribution)
}
