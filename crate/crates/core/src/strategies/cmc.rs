use std::collections::{BTreeMap, BTreeSet};

use super::linear::single_qubit_factors;
use super::{full_mask, per_circuit, split, RunContext};
use crate::bits;
use crate::calibration::{
    assemble_for_measured, group_preparations, CalibrationMatrix, CountsRecord, Distribution, JoinPlan,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::noise::{Circuit, Device, Phase};
use crate::topology::{
    correlation_weights, err_map, greedy_patch_plan, local_pairs, plan_patches, CorrelationWeights, Edge, ErrMap,
    PatchPlan,
};

/// Patch matrices from one calibration pass, plus the raw counts when sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCalibration {
    pub matrices: Vec<CalibrationMatrix>,
    pub records: Vec<CountsRecord>,
}

/// Run `2^p` merged preparation circuits per group, `shots` each, and
/// estimate every patch matrix from the marginal counts on its qubits.
pub fn calibrate_patches(device: &mut Device, plan: &PatchPlan, shots: u64, phase: Phase) -> Result<PatchCalibration> {
    let n = device.num_qubits();
    let prep = Circuit::basis(n, 0)?;
    let mut matrices = Vec::with_capacity(plan.num_patches());
    let mut records = Vec::new();
    for group in &plan.groups {
        let measured: Vec<usize> = group.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let positions: Vec<Vec<usize>> = group
            .iter()
            .map(|p| p.iter().map(|q| measured.binary_search(q).expect("patch qubit is measured")).collect())
            .collect();
        // Per patch, per prepared local index: accumulated weighted column and shots.
        let mut columns: Vec<BTreeMap<usize, (Vec<f64>, u64)>> = vec![BTreeMap::new(); group.len()];
        let mut counts: Vec<BTreeMap<usize, BTreeMap<usize, u64>>> = vec![BTreeMap::new(); group.len()];
        for circuit in group_preparations(group)? {
            let mask = circuit.iter().fold(0u64, |m, p| m | p.mask(n));
            let out = device.run(&prep, mask, &measured, shots, phase)?;
            for (i, p) in circuit.iter().enumerate() {
                let dim = 1usize << p.support.len();
                let local = out.distribution.marginal(&positions[i])?;
                let col = columns[i].entry(p.local).or_insert_with(|| (vec![0.0; dim], 0));
                for (k, w) in local.iter() {
                    col.0[k as usize] += w * shots as f64;
                }
                col.1 += shots;
                if let Some(c) = &out.counts {
                    let slot = counts[i].entry(p.local).or_default();
                    for (&key, &k) in c {
                        *slot.entry(bits::extract(key, measured.len(), &positions[i])).or_insert(0) += k;
                    }
                }
            }
        }
        for (i, support) in group.iter().enumerate() {
            let dim = 1usize << support.len();
            let mut m = Matrix::zeros(dim, dim);
            for (&c, (col, s)) in &columns[i] {
                for (r, &w) in col.iter().enumerate() {
                    m[(r, c)] = w / *s as f64;
                }
            }
            linalg::normalize_columns(&mut m);
            matrices.push(CalibrationMatrix::new(support.clone(), m)?);
            for (&c, observed) in &counts[i] {
                records.push(CountsRecord {
                    support: support.clone(),
                    prepared: bits::local_bitstring(c, support.len()),
                    counts: observed.iter().map(|(&o, &k)| (bits::local_bitstring(o, support.len()), k)).collect(),
                    shots: observed.values().sum(),
                    device: String::new(),
                    timestamp: String::new(),
                });
            }
        }
    }
    Ok(PatchCalibration { matrices, records })
}

/// Join the patches, invert, and apply to `raw` (a distribution over the
/// `measured` qubits in ascending order).
pub fn mitigate_with_patches(
    patches: &[CalibrationMatrix],
    measured: &[usize],
    num_qubits: usize,
    raw: &Distribution,
    cull: f64,
) -> Result<Distribution> {
    let plan = JoinPlan::canonical(patches.iter().map(|p| p.support().to_vec()))?;
    let model = assemble_for_measured(patches, &plan, measured, num_qubits)?.restrict_to(measured)?;
    model.invert()?.apply(raw, cull)
}

fn diagnostics_for(plan: &PatchPlan, shots: u64) -> Vec<String> {
    vec![format!(
        "{} patches in {} groups, {} calibration circuits at {shots} shots",
        plan.num_patches(),
        plan.num_groups(),
        plan.num_circuits()
    )]
}

pub fn run_cmc(
    ctx: &RunContext<'_>,
    device: &mut Device,
    separation: usize,
    cull: f64,
    calibration_fraction: f64,
) -> Result<(Distribution, Vec<String>)> {
    let n = ctx.circuit.num_qubits();
    let plan = greedy_patch_plan(ctx.map, separation)?;
    let (cal, circ) = split(ctx.total_shots, calibration_fraction)?;
    let r = per_circuit(cal, plan.num_circuits() as u64, "calibration")?;
    let patches = calibrate_patches(device, &plan, r, Phase::Calibration)?;
    let raw = device.run_all(ctx.circuit, circ, Phase::Circuit)?.distribution;
    let all: Vec<usize> = (0..n).collect();
    Ok((mitigate_with_patches(&patches.matrices, &all, n, &raw, cull)?, diagnostics_for(&plan, r)))
}

pub(crate) struct ErrParams {
    pub locality: usize,
    pub max_edges: Option<usize>,
    pub separation: usize,
    pub cull: f64,
    pub profile_fraction: f64,
    pub calibration_fraction: f64,
    pub err_map: Option<ErrMap>,
}

/// Estimate pairwise correlation weights for every pair within `locality`
/// on the coupling map, spending at most `shots` profiling shots.
///
/// Single-qubit matrices come from `I^n` and `X^n`; pairs are calibrated in
/// groups separated by `separation` on the coupling map.
pub fn profile_correlations(
    device: &mut Device,
    map: &crate::topology::CouplingMap,
    locality: usize,
    separation: usize,
    shots: u64,
) -> Result<CorrelationWeights> {
    let n = device.num_qubits();
    let pairs = local_pairs(map, locality)?;
    if pairs.is_empty() {
        return Err(Error::Empty("local pairs"));
    }
    let plan = plan_patches(&pairs, map, separation)?;
    let r = per_circuit(shots, 2 + plan.num_circuits() as u64, "profiling")?;
    let prep = Circuit::basis(n, 0)?;
    let all: Vec<usize> = (0..n).collect();
    let zeros = device.run(&prep, 0, &all, r, Phase::Profiling)?.distribution;
    let ones = device.run(&prep, full_mask(n), &all, r, Phase::Profiling)?.distribution;
    let singles: BTreeMap<usize, CalibrationMatrix> = single_qubit_factors(&zeros, &ones, &all)?
        .into_iter()
        .map(|f| Ok((f.support[0], CalibrationMatrix::new(f.support, f.matrix)?)))
        .collect::<Result<_>>()?;
    let measured = calibrate_patches(device, &plan, r, Phase::Profiling)?;
    let pair_mats: BTreeMap<Edge, CalibrationMatrix> =
        measured.matrices.into_iter().map(|m| ((m.support()[0], m.support()[1]), m)).collect();
    correlation_weights(&singles, &pair_mats, Some(locality))
}

pub(crate) fn run_cmc_err(ctx: &RunContext<'_>, device: &mut Device, p: ErrParams) -> Result<(Distribution, Vec<String>)> {
    let n = ctx.circuit.num_qubits();
    let mut diagnostics = Vec::new();
    let (profile, rest) = match p.err_map {
        Some(_) => (0, ctx.total_shots),
        None => split(ctx.total_shots, p.profile_fraction)?,
    };
    let map = match p.err_map {
        Some(m) => m,
        None => {
            let weights = profile_correlations(device, ctx.map, p.locality, p.separation, profile)?;
            err_map(&weights, p.max_edges.unwrap_or(n))?
        }
    };
    diagnostics.push(format!("err map edges: {:?}", map.edges));

    // Calibration fraction is a share of the whole budget.
    let fraction = if profile == 0 {
        p.calibration_fraction
    } else {
        (p.calibration_fraction * ctx.total_shots as f64 / rest as f64).min(0.999)
    };
    let (cal, circ) = split(rest, fraction)?;

    let distance = map.to_coupling_map(n)?;
    let mut plan = if map.edges.is_empty() {
        PatchPlan { groups: Vec::new(), separation: p.separation }
    } else {
        plan_patches(&map.edges, &distance, p.separation)?
    };
    let covered = map.vertices();
    let absent: Vec<Vec<usize>> = (0..n).filter(|q| !covered.contains(q)).map(|q| vec![q]).collect();
    if !absent.is_empty() {
        plan.groups.push(absent);
    }
    let r = per_circuit(cal, plan.num_circuits() as u64, "calibration")?;
    let patches = calibrate_patches(device, &plan, r, Phase::Calibration)?;
    diagnostics.extend(diagnostics_for(&plan, r));
    let raw = device.run_all(ctx.circuit, circ, Phase::Circuit)?.distribution;
    let all: Vec<usize> = (0..n).collect();
    Ok((mitigate_with_patches(&patches.matrices, &all, n, &raw, p.cull)?, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{correlated_channel, ideal_ghz, CorrelatedKind, Mode, NoiseSpec};
    use crate::strategies::{run_method, MethodId, StrategyConfig};
    use crate::topology::Architecture;

    fn ghz_ctx(map: &crate::topology::CouplingMap) -> Circuit {
        Circuit::new(ideal_ghz(map.num_qubits()).unwrap())
    }

    #[test]
    fn exact_cmc_recovers_ghz_under_neighbour_correlations() {
        let map = "linear:5".parse::<Architecture>().unwrap().generate().unwrap();
        let mut spec = NoiseSpec::uniform(5, 0.03, 0.06);
        spec.correlated.push(correlated_channel(vec![1, 2], CorrelatedKind::PairwiseFlip, 0.04).unwrap());
        let circuit = ghz_ctx(&map);
        let ctx = RunContext { circuit: &circuit, map: &map, total_shots: 4000, seed: 0 };
        let mut dev = Device::new(5, &spec, Mode::Exact, 0).unwrap();
        let out = run_method(&StrategyConfig::default_for(MethodId::Cmc), &ctx, &mut dev).unwrap();
        assert!((out.mitigated.get(0) - 0.5).abs() < 1e-6, "{:?}", out.mitigated);
        assert!((out.mitigated.get(31) - 0.5).abs() < 1e-6);
        assert!(out.ledger.total_shots() <= 4000);
    }

    #[test]
    fn sampled_records_match_matrices() {
        let map = "linear:4".parse::<Architecture>().unwrap().generate().unwrap();
        let plan = greedy_patch_plan(&map, 1).unwrap();
        let mut dev = Device::new(4, &NoiseSpec::uniform(4, 0.05, 0.1), Mode::Sampled, 3).unwrap();
        let cal = calibrate_patches(&mut dev, &plan, 500, Phase::Calibration).unwrap();
        assert_eq!(cal.records.len(), 4 * plan.num_patches());
        for m in &cal.matrices {
            let recs: Vec<CountsRecord> = cal.records.iter().filter(|r| r.support == m.support()).cloned().collect();
            let est = crate::calibration::estimate_matrix(&recs).unwrap();
            assert!((est.matrix() - m.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn cmc_err_finds_planted_correlation() {
        let map = "linear:6".parse::<Architecture>().unwrap().generate().unwrap();
        let mut spec = NoiseSpec::uniform(6, 0.02, 0.04);
        spec.correlated.push(correlated_channel(vec![0, 3], CorrelatedKind::PairwiseFlip, 0.1).unwrap());
        let circuit = ghz_ctx(&map);
        let ctx = RunContext { circuit: &circuit, map: &map, total_shots: 40_000, seed: 0 };
        let mut dev = Device::new(6, &spec, Mode::Exact, 0).unwrap();
        let out = run_method(&StrategyConfig::default_for(MethodId::CmcErr), &ctx, &mut dev).unwrap();
        assert!(out.diagnostics[0].contains("(0, 3)"), "{:?}", out.diagnostics);
        assert!((out.mitigated.get(0) - 0.5).abs() < 1e-6, "{:?}", out.mitigated);
        assert!(out.ledger.profiling_shots > 0 && out.ledger.total_shots() <= 40_000);
    }
}
