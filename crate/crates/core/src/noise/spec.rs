use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{state_dependent_channel, MeasurementChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRates {
    /// Probability of reading 1 when the qubit is 0.
    pub p01: f64,
    /// Probability of reading 0 when the qubit is 1.
    pub p10: f64,
}

/// Simulated noise for one device.
///
/// Readout applies the per-qubit channels (ascending qubit), then
/// `correlated` in list order, then every `crosstalk` channel whose whole
/// support is being measured.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub per_qubit: BTreeMap<usize, ReadoutRates>,
    #[serde(default)]
    pub correlated: Vec<MeasurementChannel>,
    /// Channels that only fire when all of their qubits are read out together.
    #[serde(default)]
    pub crosstalk: Vec<MeasurementChannel>,
    /// Independent bit-flip probability per two-qubit gate.
    #[serde(default)]
    pub gate_flip: Option<f64>,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn uniform(n: usize, p01: f64, p10: f64) -> Self {
        NoiseSpec {
            per_qubit: (0..n).map(|q| (q, ReadoutRates { p01, p10 })).collect(),
            ..Self::default()
        }
    }

    /// Per-qubit `p01`, `p10` drawn independently from `U[lo, hi]`.
    pub fn random_state_dependent(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Self {
        NoiseSpec {
            per_qubit: (0..n)
                .map(|q| (q, ReadoutRates { p01: rng.gen_range(lo..=hi), p10: rng.gen_range(lo..=hi) }))
                .collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (&q, r) in &self.per_qubit {
            if q >= n {
                return Err(Error::IndexOutOfRange { index: q, num_qubits: n });
            }
            state_dependent_channel(q, r.p01, r.p10)?;
        }
        for c in self.correlated.iter().chain(&self.crosstalk) {
            if let Some(&q) = c.support().iter().find(|&&q| q >= n) {
                return Err(Error::IndexOutOfRange { index: q, num_qubits: n });
            }
        }
        if let Some(g) = self.gate_flip {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid(format!("gate_flip = {g} is not a probability")));
            }
        }
        Ok(())
    }

    /// Per-qubit then correlated channels, in application order.
    pub fn readout_channels(&self) -> Result<Vec<MeasurementChannel>> {
        let mut out: Vec<MeasurementChannel> = self
            .per_qubit
            .iter()
            .map(|(&q, r)| state_dependent_channel(q, r.p01, r.p10))
            .collect::<Result<_>>()?;
        out.extend(self.correlated.iter().cloned());
        Ok(out)
    }
}
