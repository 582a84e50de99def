use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::coupling::{CouplingMap, Edge};
use crate::calibration::CalibrationMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Frobenius distance between each measured pair matrix and the product of
/// its single-qubit matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct CorrelationWeights {
    pub weights: BTreeMap<Edge, f64>,
    /// Distance bound used to enumerate candidate pairs, if any.
    pub locality: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    locality: Option<usize>,
    weights: Vec<(usize, usize, f64)>,
}

impl TryFrom<RawWeights> for CorrelationWeights {
    type Error = Error;
    fn try_from(raw: RawWeights) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (a, b, w) in raw.weights {
            if a == b || !(w >= 0.0) {
                return Err(Error::invalid(format!("bad weight entry ({a}, {b}, {w})")));
            }
            weights.insert((a.min(b), a.max(b)), w);
        }
        Ok(CorrelationWeights { weights, locality: raw.locality })
    }
}

impl From<CorrelationWeights> for RawWeights {
    fn from(c: CorrelationWeights) -> Self {
        RawWeights { locality: c.locality, weights: c.weights.into_iter().map(|((a, b), w)| (a, b, w)).collect() }
    }
}

/// Pairs `(i, j)`, `i < j`, at graph distance at most `k`.
pub fn local_pairs(map: &CouplingMap, k: usize) -> Result<BTreeSet<Edge>> {
    let mut out = BTreeSet::new();
    for i in 0..map.num_qubits() {
        let d = map.distances_from(i)?;
        for (j, dj) in d.iter().enumerate().skip(i + 1) {
            if dj.is_some_and(|d| d <= k) {
                out.insert((i, j));
            }
        }
    }
    Ok(out)
}

/// `w_ij = ||C_i ⊗ C_j − C_ij||_F` for every supplied pair.
pub fn correlation_weights(
    singles: &BTreeMap<usize, CalibrationMatrix>,
    pairs: &BTreeMap<Edge, CalibrationMatrix>,
    locality: Option<usize>,
) -> Result<CorrelationWeights> {
    let mut weights = BTreeMap::new();
    for (&(a, b), cij) in pairs {
        let (i, j) = (a.min(b), a.max(b));
        if cij.support() != [i, j] {
            return Err(Error::SupportMismatch(format!(
                "pair ({a}, {b}) carries a matrix on {:?}",
                cij.support()
            )));
        }
        let ci = singles.get(&i).ok_or(Error::MissingSingle(i))?;
        let cj = singles.get(&j).ok_or(Error::MissingSingle(j))?;
        if ci.num_qubits() != 1 || cj.num_qubits() != 1 {
            return Err(Error::DimensionMismatch { expected: 2, found: ci.matrix().nrows().max(cj.matrix().nrows()) });
        }
        let product = linalg::kron(ci.matrix(), cj.matrix());
        weights.insert((i, j), linalg::frobenius(&(product - cij.matrix())));
    }
    Ok(CorrelationWeights { weights, locality })
}

/// Selected error-correlation edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrMap {
    pub edges: BTreeSet<Edge>,
    pub max_edges: usize,
}

impl ErrMap {
    pub fn vertices(&self) -> BTreeSet<usize> {
        self.edges.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn to_coupling_map(&self, num_qubits: usize) -> Result<CouplingMap> {
        CouplingMap::new(num_qubits, self.edges.iter().copied())
    }
}

/// Greedy selection of the heaviest correlations, at most `max_edges` edges.
///
/// Weights are visited in descending order, ties by ascending pair. A pair
/// with exactly one endpoint already selected brings in the other endpoint.
/// A pair with neither endpoint selected is added as a dangling edge and
/// brings in only the endpoint whose next weight in the list is lighter
/// (an endpoint with no later pair counts as lightest; ties go to the lower
/// index). Pairs whose endpoints are both selected are skipped.
pub fn err_map(weights: &CorrelationWeights, max_edges: usize) -> Result<ErrMap> {
    if weights.weights.is_empty() {
        return Err(Error::Empty("correlation weights"));
    }
    if max_edges == 0 {
        return Err(Error::invalid("max_edges must be positive"));
    }
    let mut order: Vec<(Edge, f64)> = weights.weights.iter().map(|(&e, &w)| (e, w)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let next_weight = |from: usize, q: usize| -> f64 {
        order[from + 1..]
            .iter()
            .find(|((a, b), _)| *a == q || *b == q)
            .map_or(f64::NEG_INFINITY, |(_, w)| *w)
    };

    let mut vertices: BTreeSet<usize> = BTreeSet::new();
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    for (idx, &((i, j), _)) in order.iter().enumerate() {
        if edges.len() >= max_edges {
            break;
        }
        match (vertices.contains(&i), vertices.contains(&j)) {
            (true, false) => {
                vertices.insert(j);
                edges.insert((i, j));
            }
            (false, true) => {
                vertices.insert(i);
                edges.insert((i, j));
            }
            (false, false) => {
                let keep = if next_weight(idx, j) < next_weight(idx, i) { j } else { i };
                vertices.insert(keep);
                edges.insert((i, j));
            }
            (true, true) => {}
        }
    }
    Ok(ErrMap { edges, max_edges })
}
