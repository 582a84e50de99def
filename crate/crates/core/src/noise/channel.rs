use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Ground-truth readout error map; same shape and invariants as a calibration matrix.
pub type MeasurementChannel = CalibrationMatrix;

fn probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// `[[1 - p01, p10], [p01, 1 - p10]]` on one qubit.
pub fn state_dependent_channel(qubit: usize, p01: f64, p10: f64) -> Result<MeasurementChannel> {
    probability("p01", p01)?;
    probability("p10", p10)?;
    CalibrationMatrix::new(vec![qubit], Matrix::from_row_slice(2, 2, &[1.0 - p01, p10, p01, 1.0 - p10]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatedKind {
    PairwiseFlip,
    TripletFlip,
    FlipAll,
}

impl CorrelatedKind {
    pub fn arity(self) -> Option<usize> {
        match self {
            CorrelatedKind::PairwiseFlip => Some(2),
            CorrelatedKind::TripletFlip => Some(3),
            CorrelatedKind::FlipAll => None,
        }
    }
}

/// With probability `p` every bit of the support is flipped, otherwise nothing happens.
pub fn correlated_channel(support: Vec<usize>, kind: CorrelatedKind, p: f64) -> Result<MeasurementChannel> {
    probability("p", p)?;
    if let Some(a) = kind.arity() {
        if support.len() != a {
            return Err(Error::invalid(format!("{kind:?} acts on {a} qubits, got {}", support.len())));
        }
    }
    let dim = 1usize << support.len();
    let mut m = Matrix::identity(dim, dim) * (1.0 - p);
    for c in 0..dim {
        m[(c ^ (dim - 1), c)] += p;
    }
    CalibrationMatrix::new(support, m)
}

/// The same correlated channel on every qubit subset of its arity, in
/// lexicographic order. `FlipAll` yields a single channel on the whole register.
pub fn correlated_layer(n: usize, kind: CorrelatedKind, p: f64) -> Result<Vec<MeasurementChannel>> {
    let arity = kind.arity().unwrap_or(n);
    subsets(n, arity).into_iter().map(|s| correlated_channel(s, kind, p)).collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { break };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Dense product of embedded channels in list order (the first channel acts first).
pub fn compose_dense(channels: &[MeasurementChannel], n: usize) -> Result<Matrix> {
    if n > 12 {
        return Err(Error::invalid(format!("dense composition refused for {n} qubits")));
    }
    let all: Vec<usize> = (0..n).collect();
    let dim = 1usize << n;
    let mut out = Matrix::identity(dim, dim);
    for c in channels {
        if let Some(&q) = c.support().iter().find(|&&q| q >= n) {
            return Err(Error::IndexOutOfRange { index: q, num_qubits: n });
        }
        out = linalg::embed(c.matrix(), c.support(), &all)? * out;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_dependent_entries() {
        let c = state_dependent_channel(0, 0.02, 0.08).unwrap();
        assert_eq!(c.matrix(), &Matrix::from_row_slice(2, 2, &[0.98, 0.08, 0.02, 0.92]));
        assert_eq!(state_dependent_channel(0, 0.0, 0.0).unwrap().matrix(), &Matrix::identity(2, 2));
        let flip = state_dependent_channel(0, 1.0, 1.0).unwrap();
        assert_eq!(flip.matrix(), &Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(state_dependent_channel(0, -0.1, 0.0).is_err());
    }

    #[test]
    fn flip_all_certain_is_negation() {
        let c = correlated_channel(vec![0, 1, 2, 3], CorrelatedKind::FlipAll, 1.0).unwrap();
        for s in 0..16 {
            assert_eq!(c.matrix()[(15 - s, s)], 1.0);
        }
        let id = correlated_channel(vec![0, 1, 2], CorrelatedKind::TripletFlip, 0.0).unwrap();
        assert_eq!(id.matrix(), &Matrix::identity(8, 8));
        assert!(correlated_channel(vec![0, 1, 2], CorrelatedKind::PairwiseFlip, 0.1).is_err());
    }

    #[test]
    fn pairwise_flip_is_correlated() {
        let c = correlated_channel(vec![0, 1], CorrelatedKind::PairwiseFlip, 0.1).unwrap();
        // prepared 00: joint error 0.1, each marginal error 0.1
        let joint = c.matrix()[(3, 0)];
        let single0 = c.matrix()[(2, 0)] + c.matrix()[(3, 0)];
        let single1 = c.matrix()[(1, 0)] + c.matrix()[(3, 0)];
        assert!(joint > single0 * single1);
    }

    #[test]
    fn layers_enumerate_subsets() {
        assert_eq!(correlated_layer(4, CorrelatedKind::PairwiseFlip, 0.1).unwrap().len(), 6);
        assert_eq!(correlated_layer(4, CorrelatedKind::TripletFlip, 0.1).unwrap().len(), 4);
        assert_eq!(correlated_layer(4, CorrelatedKind::FlipAll, 0.1).unwrap().len(), 1);
    }

    #[test]
    fn compose_order() {
        let a = state_dependent_channel(0, 0.1, 0.3).unwrap();
        let b = state_dependent_channel(1, 0.2, 0.05).unwrap();
        let ab = compose_dense(&[a.clone(), b.clone()], 2).unwrap();
        let ba = compose_dense(&[b, a.clone()], 2).unwrap();
        assert!((&ab - &ba).norm() < 1e-15);
        let pair = correlated_channel(vec![0, 1], CorrelatedKind::PairwiseFlip, 0.2).unwrap();
        let x = compose_dense(&[a.clone(), pair.clone()], 2).unwrap();
        let y = compose_dense(&[pair, a], 2).unwrap();
        assert!((&x - &y).norm() > 1e-3);
        assert!(linalg::max_column_sum_error(&x) < 1e-12);
    }
}
