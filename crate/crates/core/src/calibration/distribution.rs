use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};

/// Outcome weights over an `n`-qubit register keyed by bitstring value.
///
/// Weights may be signed between inversion steps; [`finalize`](Self::finalize)
/// restores a probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct Distribution {
    n: usize,
    entries: BTreeMap<u64, f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    num_qubits: usize,
    probabilities: BTreeMap<String, f64>,
}

impl TryFrom<RawDistribution> for Distribution {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        let mut d = Distribution::new(raw.num_qubits)?;
        for (s, w) in raw.probabilities {
            let (key, n) = bits::parse_bitstring(&s)?;
            if n != d.n {
                return Err(Error::RegisterMismatch { required: d.n, found: n });
            }
            d.add(key, w);
        }
        Ok(d)
    }
}

impl From<Distribution> for RawDistribution {
    fn from(d: Distribution) -> Self {
        RawDistribution { num_qubits: d.n, probabilities: d.to_bitstring_map() }
    }
}

impl Distribution {
    pub fn new(n: usize) -> Result<Self> {
        bits::check_register(n)?;
        Ok(Distribution { n, entries: BTreeMap::new() })
    }

    pub fn point(n: usize, key: u64) -> Result<Self> {
        let mut d = Self::new(n)?;
        d.entries.insert(key, 1.0);
        Ok(d)
    }

    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut d = Self::new(n)?;
        for (k, w) in entries {
            if n < 64 && k >> n != 0 {
                return Err(Error::invalid(format!("key {k} exceeds a {n}-qubit register")));
            }
            d.add(k, w);
        }
        Ok(d)
    }

    /// Empirical frequencies of integer-keyed counts.
    pub fn from_counts(n: usize, counts: &BTreeMap<u64, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::Empty("counts"));
        }
        Self::from_entries(n, counts.iter().map(|(&k, &c)| (k, c as f64 / total as f64)))
    }

    /// Empirical frequencies of bitstring-keyed counts.
    pub fn from_bitstring_counts(counts: &BTreeMap<String, u64>) -> Result<Self> {
        let mut n = None;
        let mut keyed = BTreeMap::new();
        for (s, &c) in counts {
            let (k, len) = bits::parse_bitstring(s)?;
            if *n.get_or_insert(len) != len {
                return Err(Error::RegisterMismatch { required: n.unwrap_or(len), found: len });
            }
            *keyed.entry(k).or_insert(0) += c;
        }
        Self::from_counts(n.ok_or(Error::Empty("counts"))?, &keyed)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: u64) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn add(&mut self, key: u64, w: f64) {
        *self.entries.entry(key).or_insert(0.0) += w;
    }

    pub fn set(&mut self, key: u64, w: f64) {
        self.entries.insert(key, w);
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().map(|(&k, &w)| (k, w))
    }

    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn has_negative(&self) -> bool {
        self.entries.values().any(|&w| w < 0.0)
    }

    /// Clamp to nonnegative, drop zeros, and rescale to unit mass.
    pub fn finalize(&mut self) -> Result<()> {
        self.entries.retain(|_, w| *w > 0.0);
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::Infeasible("distribution has no positive mass".into()));
        }
        for w in self.entries.values_mut() {
            *w /= total;
        }
        Ok(())
    }

    pub fn finalized(mut self) -> Result<Self> {
        self.finalize()?;
        Ok(self)
    }

    /// Distribution over `support` (in support order) summed over all other qubits.
    pub fn marginal(&self, support: &[usize]) -> Result<Distribution> {
        for &q in support {
            if q >= self.n {
                return Err(Error::IndexOutOfRange { index: q, num_qubits: self.n });
            }
        }
        let mut out = Distribution::new(support.len())?;
        for (&k, &w) in &self.entries {
            out.add(bits::extract(k, self.n, support) as u64, w);
        }
        Ok(out)
    }

    /// Flip every outcome by `mask` (undoes a pre-measurement X layer).
    pub fn xor_mask(&self, mask: u64) -> Distribution {
        Distribution {
            n: self.n,
            entries: self.entries.iter().map(|(&k, &w)| (k ^ mask, w)).collect(),
        }
    }

    /// Weighted sum `Σ w_i d_i` over distributions on the same register.
    pub fn mix(parts: &[(f64, &Distribution)]) -> Result<Distribution> {
        let n = parts.first().ok_or(Error::Empty("mixture"))?.1.n;
        let mut out = Distribution::new(n)?;
        for (w, d) in parts {
            if d.n != n {
                return Err(Error::RegisterMismatch { required: n, found: d.n });
            }
            for (k, p) in d.iter() {
                out.add(k, w * p);
            }
        }
        Ok(out)
    }

    pub fn to_bitstring_map(&self) -> BTreeMap<String, f64> {
        self.entries.iter().map(|(&k, &w)| (bits::to_bitstring(k, self.n), w)).collect()
    }
}
