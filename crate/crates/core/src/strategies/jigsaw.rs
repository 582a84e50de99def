use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cmc::calibrate_patches;
use super::{per_circuit, split, RunContext};
use crate::bits;
use crate::calibration::{Direction, Distribution, Factor, SparseCalibration, DEFAULT_CULL};
use crate::error::{Error, Result};
use crate::noise::{Device, Phase};
use crate::topology::PatchPlan;

pub(crate) struct JigsawParams {
    pub patch_count: usize,
    pub epsilon: f64,
    pub subset_calibration: bool,
    pub calibration_fraction: f64,
    pub global_fraction: f64,
}

/// Counters from one or more Bayesian updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    /// Sub-table outcomes with weight but no matching global state.
    pub empty: usize,
    /// Updated subsets holding a single global state.
    pub singleton: usize,
    /// Non-empty subsets at or below the support threshold, left as they were.
    pub unsupported: usize,
    /// Updates skipped because no supported outcome carried sub-table weight.
    pub skipped: usize,
}

impl UpdateStats {
    fn absorb(&mut self, o: UpdateStats) {
        self.empty += o.empty;
        self.singleton += o.singleton;
        self.unsupported += o.unsupported;
        self.skipped += o.skipped;
    }
}

/// Reweight `global` so its marginal on `support` follows `table`.
///
/// Global states are grouped by their bits on `support`. A group whose
/// global mass exceeds `epsilon` is rescaled to the sub-table weight of its
/// outcome; the others are left untouched, and the supported groups share
/// the mass they held before. With `epsilon = 0` this is the plain update
/// `P'(s) = P(s) S(s_l) / m_l(s_l)` followed by renormalization.
pub fn bayes_update(
    global: &Distribution,
    support: &[usize],
    table: &Distribution,
    epsilon: f64,
) -> Result<(Distribution, UpdateStats)> {
    if table.num_qubits() != support.len() {
        return Err(Error::DimensionMismatch { expected: support.len(), found: table.num_qubits() });
    }
    if epsilon < 0.0 {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    let n = global.num_qubits();
    let mut mass: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (key, w) in global.iter() {
        let e = mass.entry(bits::extract(key, n, support)).or_insert((0.0, 0));
        e.0 += w;
        e.1 += 1;
    }
    let mut stats = UpdateStats {
        empty: table.iter().filter(|&(x, s)| s > 0.0 && !mass.contains_key(&(x as usize))).count(),
        ..UpdateStats::default()
    };
    let supported = |x: &usize| mass.get(x).is_some_and(|&(m, _)| m > epsilon);
    let m_sup: f64 = mass.iter().filter(|(x, _)| supported(x)).map(|(_, &(m, _))| m).sum();
    let s_sup: f64 = mass.keys().filter(|x| supported(x)).map(|&x| table.get(x as u64)).sum();
    stats.unsupported = mass.keys().filter(|x| !supported(x)).count();
    if m_sup <= 0.0 || s_sup <= 0.0 {
        stats.skipped = 1;
        return Ok((global.clone(), stats));
    }
    let scale: BTreeMap<usize, f64> = mass
        .iter()
        .filter(|(x, _)| supported(x))
        .map(|(&x, &(m, _))| (x, table.get(x as u64) * m_sup / s_sup / m))
        .collect();
    stats.singleton = mass.iter().filter(|(x, &(_, c))| c == 1 && scale.get(x).is_some_and(|&s| s > 0.0)).count();
    let mut out = Distribution::new(n)?;
    for (key, w) in global.iter() {
        let f = scale.get(&bits::extract(key, n, support)).copied().unwrap_or(1.0);
        if w * f > 0.0 {
            out.set(key, w * f);
        }
    }
    Ok((out, stats))
}

fn random_pairs(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    qubits
        .chunks_exact(2)
        .map(|c| {
            let mut p = c.to_vec();
            p.sort_unstable();
            p
        })
        .collect()
}

/// Global runs refined by random disjoint-pair runs, `patch_count` times.
pub(crate) fn run_jigsaw(
    ctx: &RunContext<'_>,
    device: &mut Device,
    p: JigsawParams,
) -> Result<(Distribution, Vec<String>)> {
    let n = ctx.circuit.num_qubits();
    if n < 2 {
        return Err(Error::Infeasible("pair tables need at least two qubits".into()));
    }
    if p.patch_count == 0 {
        return Err(Error::invalid("patch_count must be positive"));
    }
    let k = p.patch_count as u64;
    let pairs_per = (n / 2) as u64;
    let (cal, circ) = if p.subset_calibration { split(ctx.total_shots, p.calibration_fraction)? } else { (0, ctx.total_shots) };
    let (global_shots, pair_shots) = split(circ, p.global_fraction)?;
    let r_global = per_circuit(global_shots, k, "global")?;
    let r_pair = per_circuit(pair_shots, k * pairs_per, "pair")?;
    let r_cal = if p.subset_calibration { per_circuit(cal, 4 * k, "pair calibration")? } else { 0 };

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let filters: Vec<Vec<Vec<usize>>> = (0..p.patch_count).map(|_| random_pairs(n, &mut rng)).collect();

    let globals = (0..k)
        .map(|_| Ok(device.run_all(ctx.circuit, r_global, Phase::Circuit)?.distribution))
        .collect::<Result<Vec<_>>>()?;
    let w = 1.0 / globals.len() as f64;
    let mut current = Distribution::mix(&globals.iter().map(|d| (w, d)).collect::<Vec<_>>())?;

    let mut stats = UpdateStats::default();
    for pairs in &filters {
        let inverses = if p.subset_calibration {
            let plan = PatchPlan { groups: vec![pairs.clone()], separation: 0 };
            let cal = calibrate_patches(device, &plan, r_cal, Phase::Calibration)?;
            cal.matrices
                .into_iter()
                .map(|m| {
                    let f = Factor::new(vec![0, 1], m.matrix().clone())?;
                    SparseCalibration::new(2, Direction::Forward, vec![f])?.invert().map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![None; pairs.len()]
        };
        for (pair, inv) in pairs.iter().zip(&inverses) {
            let mut table = device.run(ctx.circuit, 0, pair, r_pair, Phase::Circuit)?.distribution;
            if let Some(inv) = inv {
                table = inv.apply(&table, DEFAULT_CULL)?;
            }
            let (next, s) = bayes_update(&current, pair, &table, p.epsilon)?;
            stats.absorb(s);
            current = next;
        }
    }
    let diag = format!(
        "empty subsets {}, singleton subsets {}, unsupported subsets {}, skipped updates {}",
        stats.empty, stats.singleton, stats.unsupported, stats.skipped
    );
    Ok((current.finalized()?, vec![diag]))
}
