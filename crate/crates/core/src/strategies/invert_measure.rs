use serde::{Deserialize, Serialize};

use super::{full_mask, per_circuit, split, RunContext};
use crate::bits;
use crate::calibration::Distribution;
use crate::error::{Error, Result};
use crate::noise::{Device, Phase};

/// `I^n`, `X^n`, `(I X)^{n/2}` and `(X I)^{n/2}` as pre-readout X masks.
pub fn sim_masks(n: usize) -> [u64; 4] {
    let odd = bits::mask_of(n, (1..n).step_by(2));
    let even = bits::mask_of(n, (0..n).step_by(2));
    [0, full_mask(n), odd, even]
}

/// Static invert-and-measure: a quarter of the budget under each mask, each
/// result unmasked, then averaged.
pub fn run_sim(ctx: &RunContext<'_>, device: &mut Device) -> Result<Distribution> {
    let n = ctx.circuit.num_qubits();
    let r = per_circuit(ctx.total_shots, 4, "masked")?;
    let all: Vec<usize> = (0..n).collect();
    let runs = sim_masks(n)
        .into_iter()
        .map(|m| Ok(device.run(ctx.circuit, m, &all, r, Phase::Circuit)?.distribution.xor_mask(m)))
        .collect::<Result<Vec<_>>>()?;
    average(&runs)
}

/// Windows of four X gates starting on even qubits, plus a final window
/// flush with the end when the even starts miss it. Registers under four
/// qubits get the single mask `X^n`.
pub fn aim_masks(n: usize) -> Vec<u64> {
    if n < 4 {
        return vec![full_mask(n)];
    }
    let mut starts: Vec<usize> = (0..).step_by(2).take_while(|s| s + 4 <= n).collect();
    if starts.last() != Some(&(n - 4)) {
        starts.push(n - 4);
    }
    starts.into_iter().map(|s| bits::mask_of(n, s..s + 4)).collect()
}

/// How AIM ranks masks after the screening phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AimScore {
    /// Largest single-outcome frequency of the unmasked result.
    #[default]
    MaxProbability,
    /// Lowest Shannon entropy of the unmasked result.
    MinEntropy,
}

impl AimScore {
    fn score(self, d: &Distribution) -> f64 {
        match self {
            AimScore::MaxProbability => d.iter().map(|(_, w)| w).fold(0.0, f64::max),
            AimScore::MinEntropy => d.iter().filter(|&(_, w)| w > 0.0).map(|(_, w)| w * w.ln()).sum(),
        }
    }
}

/// Adaptive invert-and-measure: screen every window mask, then spend the
/// rest of the budget on the `top_k` best and average those runs.
pub fn run_aim(
    ctx: &RunContext<'_>,
    device: &mut Device,
    phase1_fraction: f64,
    top_k: usize,
    score: AimScore,
) -> Result<(Distribution, Vec<String>)> {
    if top_k == 0 {
        return Err(Error::invalid("top_k must be positive"));
    }
    let n = ctx.circuit.num_qubits();
    let masks = aim_masks(n);
    let (screen, rest) = split(ctx.total_shots, phase1_fraction)?;
    let r1 = per_circuit(screen, masks.len() as u64, "screening")?;
    let all: Vec<usize> = (0..n).collect();
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(masks.len());
    for (i, &m) in masks.iter().enumerate() {
        let d = device.run(ctx.circuit, m, &all, r1, Phase::Circuit)?.distribution.xor_mask(m);
        ranked.push((score.score(&d), i));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<u64> = ranked.iter().take(top_k).map(|&(_, i)| masks[i]).collect();
    let r2 = per_circuit(rest, chosen.len() as u64, "selected")?;
    let runs = chosen
        .iter()
        .map(|&m| Ok(device.run(ctx.circuit, m, &all, r2, Phase::Circuit)?.distribution.xor_mask(m)))
        .collect::<Result<Vec<_>>>()?;
    let diag = format!(
        "selected masks {:?}",
        chosen.iter().map(|&m| bits::to_bitstring(m, n)).collect::<Vec<_>>()
    );
    Ok((average(&runs)?, vec![diag]))
}

fn average(runs: &[Distribution]) -> Result<Distribution> {
    let w = 1.0 / runs.len() as f64;
    let parts: Vec<(f64, &Distribution)> = runs.iter().map(|d| (w, d)).collect();
    Distribution::mix(&parts)?.finalized()
}
