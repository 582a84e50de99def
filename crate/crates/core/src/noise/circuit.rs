use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::calibration::Distribution;
use crate::error::{Error, Result};
use crate::topology::CouplingMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Simulated,
}

/// A benchmark circuit reduced to what readout mitigation sees: the ideal
/// outcome distribution and the bit flips gate noise may add before readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub ideal: Distribution,
    pub provenance: Provenance,
    /// Each entry flips the bits of `mask` with probability `p`, in order.
    pub flips: Vec<(u64, f64)>,
}

impl Circuit {
    pub fn new(ideal: Distribution) -> Self {
        Circuit { ideal, provenance: Provenance::Analytic, flips: Vec::new() }
    }

    /// Deterministic preparation of one basis state.
    pub fn basis(n: usize, key: u64) -> Result<Self> {
        Ok(Self::new(Distribution::point(n, key)?))
    }

    pub fn num_qubits(&self) -> usize {
        self.ideal.num_qubits()
    }

    /// GHZ state prepared along the BFS schedule of `map` from qubit 0. With
    /// `gate_flip = g`, each CNOT may flip its target, and the flip then
    /// propagates to every qubit later reached through that target.
    pub fn ghz(map: &CouplingMap, gate_flip: Option<f64>) -> Result<Self> {
        let n = map.num_qubits();
        let mut c = Self::new(ideal_ghz(n)?);
        if let Some(g) = gate_flip.filter(|&g| g > 0.0) {
            let schedule = ghz_cnot_schedule(map, 0)?;
            let mut children = vec![Vec::new(); n];
            for &(a, b) in &schedule {
                children[a].push(b);
            }
            for &(_, t) in &schedule {
                let mut mask = 0u64;
                let mut stack = vec![t];
                while let Some(u) = stack.pop() {
                    mask |= bits::qubit_mask(n, u);
                    stack.extend(&children[u]);
                }
                c.flips.push((mask, g));
            }
        }
        Ok(c)
    }
}

/// `{0^n: 1/2, 1^n: 1/2}`.
pub fn ideal_ghz(n: usize) -> Result<Distribution> {
    bits::check_register(n)?;
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Distribution::from_entries(n, [(0, 0.5), (all, 0.5)])
}

/// BFS tree edges from `root` in visit order, as `(control, target)`.
pub fn ghz_cnot_schedule(map: &CouplingMap, root: usize) -> Result<Vec<(usize, usize)>> {
    let n = map.num_qubits();
    if root >= n {
        return Err(Error::IndexOutOfRange { index: root, num_qubits: n });
    }
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    while let Some(u) = queue.pop_front() {
        for &w in map.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                out.push((u, w));
                queue.push_back(w);
            }
        }
    }
    if let Some(q) = seen.iter().position(|s| !s) {
        return Err(Error::Disconnected(q));
    }
    Ok(out)
}
