use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::{check_support, CalibrationMatrix};
use crate::bits;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Observed counts for one prepared basis state of a patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub support: Vec<usize>,
    /// Local bitstring over `support`.
    pub prepared: String,
    /// Local observed bitstring -> count.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    #[serde(default)]
    pub device: String,
    #[serde(default)]
    pub timestamp: String,
}

impl CountsRecord {
    pub fn validate(&self) -> Result<()> {
        check_support(&self.support)?;
        let p = self.support.len();
        if self.shots == 0 {
            return Err(Error::invalid("record with zero shots"));
        }
        if self.prepared.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: self.prepared.len() });
        }
        bits::parse_bitstring(&self.prepared)?;
        let mut total = 0u64;
        for (s, &c) in &self.counts {
            let (_, len) = bits::parse_bitstring(s)?;
            if len != p {
                return Err(Error::DimensionMismatch { expected: p, found: len });
            }
            total += c;
        }
        if total != self.shots {
            return Err(Error::invalid(format!("counts sum to {total}, record claims {} shots", self.shots)));
        }
        Ok(())
    }

    pub fn prepared_index(&self) -> Result<usize> {
        Ok(bits::parse_bitstring(&self.prepared)?.0 as usize)
    }
}

/// One basis-state preparation on a patch: X gates on the qubits whose bit in
/// `local` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preparation {
    pub support: Vec<usize>,
    pub local: usize,
}

impl Preparation {
    pub fn mask(&self, n: usize) -> u64 {
        bits::deposit(0, n, &self.support, self.local)
    }

    pub fn bitstring(&self) -> String {
        bits::local_bitstring(self.local, self.support.len())
    }
}

pub fn preparation_circuits(support: &[usize]) -> Result<Vec<Preparation>> {
    check_support(support)?;
    Ok((0..1usize << support.len())
        .map(|local| Preparation { support: support.to_vec(), local })
        .collect())
}

/// Merged preparations for a group of mutually separated patches: circuit `c`
/// prepares local index `c mod 2^p` on every patch at once.
pub fn group_preparations(patches: &[Vec<usize>]) -> Result<Vec<Vec<Preparation>>> {
    let width = patches.iter().map(Vec::len).max().ok_or(Error::Empty("patch group"))?;
    for p in patches {
        check_support(p)?;
    }
    Ok((0..1usize << width)
        .map(|c| {
            patches
                .iter()
                .map(|s| Preparation { support: s.clone(), local: c % (1 << s.len()) })
                .collect()
        })
        .collect())
}

/// Column `c` is the empirical outcome frequency when basis state `c` was prepared.
pub fn estimate_matrix(records: &[CountsRecord]) -> Result<CalibrationMatrix> {
    let first = records.first().ok_or(Error::Empty("counts records"))?;
    let support = first.support.clone();
    let dim = 1usize << support.len();
    let mut columns: Vec<Option<(BTreeMap<usize, u64>, u64)>> = vec![None; dim];
    for r in records {
        r.validate()?;
        if r.support != support {
            return Err(Error::SupportMismatch(format!("{:?} vs {:?}", r.support, support)));
        }
        let col = columns[r.prepared_index()?].get_or_insert_with(|| (BTreeMap::new(), 0));
        for (s, &c) in &r.counts {
            *col.0.entry(bits::parse_bitstring(s)?.0 as usize).or_insert(0) += c;
        }
        col.1 += r.shots;
    }
    let mut m = Matrix::zeros(dim, dim);
    for (c, col) in columns.iter().enumerate() {
        let (counts, shots) = col.as_ref().ok_or_else(|| Error::MissingBasisState {
            support: support.clone(),
            state: bits::local_bitstring(c, support.len()),
        })?;
        for (&r, &k) in counts {
            m[(r, c)] = k as f64 / *shots as f64;
        }
    }
    CalibrationMatrix::new(support, m)
}
