use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::matrix::{check_support, CalibrationMatrix, SharedOrder};
use super::sparse::{Direction, Factor, SparseCalibration};
use crate::error::{Error, Result};
use crate::linalg;

/// How a qubit covered by several patches is split between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedQubit {
    /// Number of patches containing the qubit.
    pub v: usize,
    /// Patch index (into the plan) -> order parameter in `0..v`.
    pub assignments: BTreeMap<usize, usize>,
}

/// Patch supports in application order plus order parameters for every qubit
/// that appears in more than one patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinPlan {
    pub patches: Vec<Vec<usize>>,
    pub shared: BTreeMap<usize, SharedQubit>,
}

impl JoinPlan {
    /// Sort supports ascending (dropping duplicates) and number each shared
    /// qubit's patches 0, 1, .. in that order.
    pub fn canonical(supports: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let sorted: BTreeSet<Vec<usize>> = supports.into_iter().collect();
        Self::in_order(sorted.into_iter().collect())
    }

    /// Keep the given application order; order parameters follow it.
    pub fn in_order(patches: Vec<Vec<usize>>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Empty("join plan"));
        }
        let mut seen: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, p) in patches.iter().enumerate() {
            check_support(p)?;
            for &q in p {
                seen.entry(q).or_default().push(idx);
            }
        }
        let shared = seen
            .into_iter()
            .filter(|(_, idxs)| idxs.len() > 1)
            .map(|(q, idxs)| {
                let assignments = idxs.iter().enumerate().map(|(a, &i)| (i, a)).collect();
                (q, SharedQubit { v: idxs.len(), assignments })
            })
            .collect();
        Ok(JoinPlan { patches, shared })
    }

    pub fn multiplicity(&self, qubit: usize) -> usize {
        match self.shared.get(&qubit) {
            Some(s) => s.v,
            None => usize::from(self.patches.iter().any(|p| p.contains(&qubit))),
        }
    }

    pub fn qubits(&self) -> BTreeSet<usize> {
        self.patches.iter().flatten().copied().collect()
    }

    /// Order parameters must form `0..v` and increase along the application order.
    pub fn validate(&self) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::Empty("join plan"));
        }
        let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, p) in self.patches.iter().enumerate() {
            check_support(p)?;
            for &q in p {
                owners.entry(q).or_default().push(idx);
            }
        }
        for (q, idxs) in &owners {
            if idxs.len() < 2 {
                if self.shared.contains_key(q) {
                    return Err(Error::JoinPlan(format!("qubit {q} is marked shared but lies in one patch")));
                }
                continue;
            }
            let s = self
                .shared
                .get(q)
                .ok_or_else(|| Error::JoinPlan(format!("missing order assignment for qubit {q}")))?;
            if s.v != idxs.len() {
                return Err(Error::JoinPlan(format!(
                    "qubit {q}: multiplicity {} but {} patches contain it",
                    s.v,
                    idxs.len()
                )));
            }
            let keys: Vec<usize> = s.assignments.keys().copied().collect();
            if &keys != idxs {
                return Err(Error::JoinPlan(format!("qubit {q}: assignments do not match its patches")));
            }
            let order: Vec<usize> = idxs.iter().map(|i| s.assignments[i]).collect();
            if order != (0..s.v).collect::<Vec<_>>() {
                return Err(Error::JoinPlan(format!(
                    "qubit {q}: order parameters {order:?} disagree with the application order"
                )));
            }
        }
        for q in self.shared.keys() {
            if !owners.contains_key(q) {
                return Err(Error::JoinPlan(format!("qubit {q} is marked shared but lies in no patch")));
            }
        }
        Ok(())
    }

    fn orders_for(&self, idx: usize, qubits: &[usize]) -> Vec<SharedOrder> {
        qubits
            .iter()
            .filter_map(|q| {
                self.shared
                    .get(q)
                    .map(|s| SharedOrder { qubit: *q, v: s.v, v_a: s.assignments[&idx] })
            })
            .collect()
    }
}

fn lookup<'a>(patches: &'a [CalibrationMatrix], support: &[usize]) -> Result<&'a CalibrationMatrix> {
    patches
        .iter()
        .find(|c| c.support() == support)
        .ok_or_else(|| Error::SupportMismatch(format!("no calibration matrix for patch {support:?}")))
}

fn register_size(patches: &[CalibrationMatrix], plan: &JoinPlan) -> usize {
    plan.qubits().last().map_or(0, |q| q + 1).max(
        patches.iter().flat_map(|c| c.support().iter()).max().map_or(0, |q| q + 1),
    )
}

/// Order-adjusted patch matrices in plan order.
pub fn join(patches: &[CalibrationMatrix], plan: &JoinPlan, num_qubits: usize) -> Result<SparseCalibration> {
    plan.validate()?;
    if num_qubits < register_size(patches, plan) {
        return Err(Error::RegisterMismatch { required: register_size(patches, plan), found: num_qubits });
    }
    let factors = plan
        .patches
        .iter()
        .enumerate()
        .map(|(idx, support)| {
            let c = lookup(patches, support)?;
            let m = c.order_adjust_multi(&plan.orders_for(idx, support))?;
            Factor::new(support.clone(), m)
        })
        .collect::<Result<Vec<_>>>()?;
    SparseCalibration::new(num_qubits, Direction::Forward, factors)
}

/// Calibration restricted to the `measured` qubits (still indexed on the full
/// register).
///
/// Patches inside `measured` are order-adjusted as in [`join`]. A patch that
/// straddles the boundary is traced onto its measured qubits and adjusted with
/// the same order parameters, which for a single kept qubit is the
/// `1/v`-th power of the traced matrix. A measured qubit reached only through
/// single-qubit traces gets one merged factor `|∏ Tr(C)^{1/v}|`. Measured
/// qubits in no patch are listed in `uncovered`.
pub fn assemble_for_measured(
    patches: &[CalibrationMatrix],
    plan: &JoinPlan,
    measured: &[usize],
    num_qubits: usize,
) -> Result<SparseCalibration> {
    plan.validate()?;
    if measured.is_empty() {
        return Err(Error::Empty("measured qubits"));
    }
    let measured: BTreeSet<usize> = measured.iter().copied().collect();
    if let Some(&q) = measured.iter().find(|&&q| q >= num_qubits) {
        return Err(Error::IndexOutOfRange { index: q, num_qubits });
    }
    // Qubits covered by at least one patch whose trace keeps more than that qubit.
    let mut wide: BTreeSet<usize> = BTreeSet::new();
    for support in &plan.patches {
        let kept: Vec<usize> = support.iter().copied().filter(|q| measured.contains(q)).collect();
        if kept.len() > 1 {
            wide.extend(kept);
        }
    }

    let mut factors: Vec<Factor> = Vec::new();
    let mut merged: BTreeMap<usize, usize> = BTreeMap::new();
    for (idx, support) in plan.patches.iter().enumerate() {
        let kept: Vec<usize> = support.iter().copied().filter(|q| measured.contains(q)).collect();
        if kept.is_empty() {
            continue;
        }
        let c = lookup(patches, support)?;
        let reduced = c.marginal(&kept)?;
        let m = reduced.order_adjust_multi(&plan.orders_for(idx, &kept))?;
        if kept.len() == 1 && !wide.contains(&kept[0]) {
            let q = kept[0];
            match merged.get(&q) {
                Some(&at) => factors[at].matrix = m * &factors[at].matrix,
                None => {
                    merged.insert(q, factors.len());
                    factors.push(Factor::new(kept, m)?);
                }
            }
        } else {
            factors.push(Factor::new(kept, m)?);
        }
    }
    for &at in merged.values() {
        linalg::normalize_columns(&mut factors[at].matrix);
    }
    let covered = plan.qubits();
    let mut sc = SparseCalibration::new(num_qubits, Direction::Forward, factors)?;
    sc.uncovered = measured.iter().copied().filter(|q| !covered.contains(q)).collect();
    if !sc.uncovered.is_empty() {
        log::warn!("measured qubits {:?} are in no patch and stay uncorrected", sc.uncovered);
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn single(q: usize, a: f64, b: f64) -> CalibrationMatrix {
        CalibrationMatrix::new(vec![q], Matrix::from_row_slice(2, 2, &[1.0 - a, b, a, 1.0 - b])).unwrap()
    }

    #[test]
    fn canonical_plan_orders_and_assigns() {
        let plan = JoinPlan::canonical([vec![2, 3], vec![0, 1], vec![1, 2], vec![0, 3]]).unwrap();
        assert_eq!(plan.patches, vec![vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]);
        let s1 = &plan.shared[&1];
        assert_eq!(s1.v, 2);
        assert_eq!(s1.assignments[&0], 0);
        assert_eq!(s1.assignments[&2], 1);
        plan.validate().unwrap();
    }

    #[test]
    fn out_of_order_assignments_rejected() {
        let mut plan = JoinPlan::canonical([vec![0, 1], vec![1, 2]]).unwrap();
        plan.shared.get_mut(&1).unwrap().assignments = [(0, 1), (1, 0)].into();
        assert!(matches!(plan.validate(), Err(Error::JoinPlan(_))));
        plan.shared.remove(&1);
        assert!(matches!(plan.validate(), Err(Error::JoinPlan(_))));
    }

    #[test]
    fn single_patch_join_is_the_patch() {
        let c = single(0, 0.1, 0.2).tensor(&single(1, 0.3, 0.05)).unwrap();
        let plan = JoinPlan::canonical([vec![0, 1]]).unwrap();
        let sc = join(std::slice::from_ref(&c), &plan, 2).unwrap();
        assert_eq!(sc.factors.len(), 1);
        assert_eq!(&sc.factors[0].matrix, c.matrix());
    }

    #[test]
    fn chain_of_independent_patches_is_product() {
        let (c0, c1, c2) = (single(0, 0.02, 0.07), single(1, 0.04, 0.08), single(2, 0.03, 0.05));
        let p01 = c0.tensor(&c1).unwrap();
        let p12 = c1.tensor(&c2).unwrap();
        let plan = JoinPlan::canonical([vec![0, 1], vec![1, 2]]).unwrap();
        let dense = join(&[p01, p12], &plan, 3).unwrap().dense().unwrap();
        let expect = linalg::kron(&linalg::kron(c0.matrix(), c1.matrix()), c2.matrix());
        assert!(linalg::frobenius(&(dense - expect)) < 1e-12);
    }

    #[test]
    fn isolated_measured_qubit_gets_one_merged_factor() {
        let (c0, c1, c2) = (single(0, 0.02, 0.07), single(1, 0.04, 0.08), single(2, 0.03, 0.05));
        let patches = [c0.tensor(&c1).unwrap(), c1.tensor(&c2).unwrap()];
        let plan = JoinPlan::canonical([vec![0, 1], vec![1, 2]]).unwrap();
        let sc = assemble_for_measured(&patches, &plan, &[1], 3).unwrap();
        assert_eq!(sc.factors.len(), 1);
        assert!(linalg::frobenius(&(&sc.factors[0].matrix - c1.matrix())) < 1e-12);
    }

    #[test]
    fn unmeasured_patch_contributes_nothing_and_uncovered_is_flagged() {
        let patches = [single(0, 0.1, 0.1).tensor(&single(1, 0.1, 0.1)).unwrap()];
        let plan = JoinPlan::canonical([vec![0, 1]]).unwrap();
        let sc = assemble_for_measured(&patches, &plan, &[3], 4).unwrap();
        assert!(sc.factors.is_empty());
        assert_eq!(sc.uncovered, vec![3]);
    }
}
