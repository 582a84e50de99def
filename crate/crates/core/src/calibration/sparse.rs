use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::matrix::check_support;
use crate::bits;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const DEFAULT_CULL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// A local matrix acting on `support` (ascending) with identity elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFactor", into = "RawFactor")]
pub struct Factor {
    pub support: Vec<usize>,
    pub matrix: Matrix,
}

#[derive(Serialize, Deserialize)]
struct RawFactor {
    support: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawFactor> for Factor {
    type Error = Error;
    fn try_from(raw: RawFactor) -> Result<Self> {
        check_support(&raw.support)?;
        let dim = 1usize << raw.support.len().min(16);
        if raw.data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: raw.data.len() });
        }
        Ok(Factor { support: raw.support, matrix: Matrix::from_row_slice(dim, dim, &raw.data) })
    }
}

impl From<Factor> for RawFactor {
    fn from(f: Factor) -> Self {
        RawFactor { support: f.support, data: f.matrix.transpose().iter().copied().collect() }
    }
}

impl Factor {
    pub fn new(support: Vec<usize>, matrix: Matrix) -> Result<Self> {
        check_support(&support)?;
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Factor { support, matrix })
    }
}

/// Ordered product of local factors. Factors are applied to a distribution in
/// list order, so the dense equivalent is `F_last ··· F_1 F_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCalibration {
    pub num_qubits: usize,
    pub direction: Direction,
    pub factors: Vec<Factor>,
    /// Measured qubits that no patch covered; they carry no factor.
    #[serde(default)]
    pub uncovered: Vec<usize>,
}

impl SparseCalibration {
    pub fn new(num_qubits: usize, direction: Direction, factors: Vec<Factor>) -> Result<Self> {
        bits::check_register(num_qubits)?;
        for f in &factors {
            if let Some(&q) = f.support.iter().find(|&&q| q >= num_qubits) {
                return Err(Error::IndexOutOfRange { index: q, num_qubits });
            }
        }
        Ok(SparseCalibration { num_qubits, direction, factors, uncovered: Vec::new() })
    }

    pub fn identity(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Direction::Forward, Vec::new())
    }

    /// Replace each factor with its inverse and reverse the order.
    pub fn invert(&self) -> Result<SparseCalibration> {
        let factors = self
            .factors
            .iter()
            .rev()
            .map(|f| {
                linalg::invert_with_ridge(&f.matrix)
                    .map(|m| Factor { support: f.support.clone(), matrix: m })
                    .ok_or_else(|| Error::Singular { support: f.support.clone() })
            })
            .collect::<Result<_>>()?;
        Ok(SparseCalibration {
            num_qubits: self.num_qubits,
            direction: match self.direction {
                Direction::Forward => Direction::Inverse,
                Direction::Inverse => Direction::Forward,
            },
            factors,
            uncovered: self.uncovered.clone(),
        })
    }

    /// Apply every factor, keeping signed weights.
    ///
    /// After each factor, entries whose magnitude is below `cull` times the
    /// current absolute mass are dropped.
    pub fn apply_signed(&self, d: &Distribution, cull: f64) -> Result<Distribution> {
        if d.num_qubits() != self.num_qubits {
            return Err(Error::RegisterMismatch { required: self.num_qubits, found: d.num_qubits() });
        }
        let n = self.num_qubits;
        let mut current: Vec<(u64, f64)> = d.iter().collect();
        for f in &self.factors {
            let dim = f.matrix.nrows();
            let mut next: HashMap<u64, f64> = HashMap::with_capacity(current.len() * 2);
            for &(key, w) in &current {
                let c = bits::extract(key, n, &f.support);
                for r in 0..dim {
                    let m = f.matrix[(r, c)];
                    if m != 0.0 {
                        *next.entry(bits::deposit(key, n, &f.support, r)).or_insert(0.0) += m * w;
                    }
                }
            }
            current = next.into_iter().collect();
            current.sort_unstable_by_key(|&(k, _)| k);
            let floor = cull * current.iter().map(|(_, w)| w.abs()).sum::<f64>();
            current.retain(|&(_, w)| w != 0.0 && w.abs() >= floor);
        }
        Distribution::from_entries(n, current)
    }

    /// Apply every factor, then clamp negatives and renormalize.
    pub fn apply(&self, d: &Distribution, cull: f64) -> Result<Distribution> {
        self.apply_signed(d, cull)?.finalized()
    }

    /// Dense `2^n x 2^n` product. Only for small registers.
    pub fn dense(&self) -> Result<Matrix> {
        let n = self.num_qubits;
        if n > 12 {
            return Err(Error::invalid(format!("dense product refused for {n} qubits")));
        }
        let all: Vec<usize> = (0..n).collect();
        let dim = 1usize << n;
        let mut out = Matrix::identity(dim, dim);
        for f in &self.factors {
            out = linalg::embed(&f.matrix, &f.support, &all)? * out;
        }
        Ok(out)
    }

    /// Relabel onto a smaller register: qubit `measured[k]` becomes qubit `k`.
    pub fn restrict_to(&self, measured: &[usize]) -> Result<SparseCalibration> {
        let map = |q: usize| {
            measured
                .iter()
                .position(|&m| m == q)
                .ok_or_else(|| Error::SupportMismatch(format!("qubit {q} not measured")))
        };
        let factors = self
            .factors
            .iter()
            .map(|f| {
                Ok(Factor {
                    support: f.support.iter().map(|&q| map(q)).collect::<Result<_>>()?,
                    matrix: f.matrix.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = SparseCalibration::new(measured.len(), self.direction, factors)?;
        out.uncovered = self.uncovered.iter().map(|&q| map(q)).collect::<Result<_>>()?;
        Ok(out)
    }
}
