use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::MeasurementChannel;
use super::circuit::Circuit;
use super::spec::NoiseSpec;
use crate::bits;
use crate::calibration::{Direction, Distribution, Factor, SparseCalibration};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Profiling,
    Calibration,
    Circuit,
}

/// Shots and circuit executions charged to each phase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotLedger {
    pub profiling_shots: u64,
    pub calibration_shots: u64,
    pub circuit_shots: u64,
    pub profiling_circuits: u64,
    pub calibration_circuits: u64,
    pub circuit_circuits: u64,
}

impl ShotLedger {
    pub fn record(&mut self, phase: Phase, shots: u64) {
        let (s, c) = match phase {
            Phase::Profiling => (&mut self.profiling_shots, &mut self.profiling_circuits),
            Phase::Calibration => (&mut self.calibration_shots, &mut self.calibration_circuits),
            Phase::Circuit => (&mut self.circuit_shots, &mut self.circuit_circuits),
        };
        *s += shots;
        *c += 1;
    }

    pub fn total_shots(&self) -> u64 {
        self.profiling_shots + self.calibration_shots + self.circuit_shots
    }

    pub fn total_circuits(&self) -> u64 {
        self.profiling_circuits + self.calibration_circuits + self.circuit_circuits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Seeded categorical sampling, one draw per shot.
    Sampled,
    /// Exact outcome distributions (the infinite-shot limit); shots are still charged.
    Exact,
}

/// Result of executing one circuit, over the measured qubits in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub distribution: Distribution,
    /// Raw counts; absent in exact mode.
    pub counts: Option<BTreeMap<u64, u64>>,
    pub shots: u64,
}

struct Sampler {
    support: Vec<usize>,
    /// Cumulative column distributions.
    columns: Vec<Vec<f64>>,
}

impl Sampler {
    fn new(c: &MeasurementChannel) -> Self {
        let m = c.matrix();
        let columns = (0..m.ncols())
            .map(|col| {
                let mut acc = 0.0;
                m.column(col)
                    .iter()
                    .map(|&p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Sampler { support: c.support().to_vec(), columns }
    }

    fn apply(&self, key: u64, n: usize, rng: &mut ChaCha8Rng) -> u64 {
        let col = &self.columns[bits::extract(key, n, &self.support)];
        let u: f64 = rng.gen::<f64>() * col[col.len() - 1];
        let r = col.partition_point(|&c| c <= u).min(col.len() - 1);
        bits::deposit(key, n, &self.support, r)
    }
}

/// A simulated device: fixed noise, a seeded stream, and a shot ledger.
pub struct Device {
    n: usize,
    readout: Vec<MeasurementChannel>,
    crosstalk: Vec<MeasurementChannel>,
    readout_samplers: Vec<Sampler>,
    crosstalk_samplers: Vec<Sampler>,
    mode: Mode,
    rng: ChaCha8Rng,
    ledger: ShotLedger,
    budget: Option<u64>,
}

impl Device {
    pub fn new(n: usize, spec: &NoiseSpec, mode: Mode, seed: u64) -> Result<Self> {
        bits::check_register(n)?;
        spec.validate(n)?;
        let readout = spec.readout_channels()?;
        let crosstalk = spec.crosstalk.clone();
        Ok(Device {
            n,
            readout_samplers: readout.iter().map(Sampler::new).collect(),
            crosstalk_samplers: crosstalk.iter().map(Sampler::new).collect(),
            readout,
            crosstalk,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ledger: ShotLedger::default(),
            budget: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Refuse any execution that would push the ledger past `total` shots.
    pub fn set_budget(&mut self, total: Option<u64>) {
        self.budget = total;
    }

    pub fn ledger(&self) -> &ShotLedger {
        &self.ledger
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.ledger.total_shots()))
    }

    /// Execute `circuit` with an X layer `mask` before readout and measure
    /// `measured` (ascending). Charged to `phase`.
    pub fn run(&mut self, circuit: &Circuit, mask: u64, measured: &[usize], shots: u64, phase: Phase) -> Result<Measurement> {
        if circuit.num_qubits() != self.n {
            return Err(Error::RegisterMismatch { required: self.n, found: circuit.num_qubits() });
        }
        if shots == 0 {
            return Err(Error::Budget("zero-shot execution".into()));
        }
        if measured.is_empty() || measured.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("measured qubits must be non-empty and ascending"));
        }
        if let Some(&q) = measured.iter().find(|&&q| q >= self.n) {
            return Err(Error::IndexOutOfRange { index: q, num_qubits: self.n });
        }
        if let Some(left) = self.remaining() {
            if shots > left {
                return Err(Error::Budget(format!("{shots} shots requested, {left} left")));
            }
        }
        self.ledger.record(phase, shots);
        let active: Vec<usize> = (0..self.crosstalk.len())
            .filter(|&i| self.crosstalk[i].support().iter().all(|q| measured.contains(q)))
            .collect();
        match self.mode {
            Mode::Exact => self.run_exact(circuit, mask, measured, shots, &active),
            Mode::Sampled => self.run_sampled(circuit, mask, measured, shots, &active),
        }
    }

    /// Whole-register measurement without a mask.
    pub fn run_all(&mut self, circuit: &Circuit, shots: u64, phase: Phase) -> Result<Measurement> {
        let all: Vec<usize> = (0..self.n).collect();
        self.run(circuit, 0, &all, shots, phase)
    }

    fn run_exact(&self, circuit: &Circuit, mask: u64, measured: &[usize], shots: u64, active: &[usize]) -> Result<Measurement> {
        let mut d = circuit.ideal.clone();
        for &(m, p) in &circuit.flips {
            let flipped = d.xor_mask(m);
            d = Distribution::mix(&[(1.0 - p, &d), (p, &flipped)])?;
        }
        let d = d.xor_mask(mask);
        let factors = self
            .readout
            .iter()
            .chain(active.iter().map(|&i| &self.crosstalk[i]))
            .map(|c| Factor::new(c.support().to_vec(), c.matrix().clone()))
            .collect::<Result<Vec<_>>>()?;
        let noisy = SparseCalibration::new(self.n, Direction::Forward, factors)?.apply_signed(&d, 0.0)?;
        let mut out = noisy.marginal(measured)?;
        out.finalize()?;
        Ok(Measurement { distribution: out, counts: None, shots })
    }

    fn run_sampled(&mut self, circuit: &Circuit, mask: u64, measured: &[usize], shots: u64, active: &[usize]) -> Result<Measurement> {
        let n = self.n;
        let ideal: Vec<(u64, f64)> = circuit.ideal.iter().filter(|&(_, w)| w > 0.0).collect();
        let mut cumulative = Vec::with_capacity(ideal.len());
        let mut acc = 0.0;
        for &(_, w) in &ideal {
            acc += w;
            cumulative.push(acc);
        }
        if ideal.is_empty() {
            return Err(Error::Empty("ideal distribution"));
        }
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u = self.rng.gen::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(ideal.len() - 1);
            let mut key = ideal[idx].0;
            for &(m, p) in &circuit.flips {
                if self.rng.gen::<f64>() < p {
                    key ^= m;
                }
            }
            key ^= mask;
            for s in &self.readout_samplers {
                key = s.apply(key, n, &mut self.rng);
            }
            for &i in active {
                key = self.crosstalk_samplers[i].apply(key, n, &mut self.rng);
            }
            *counts.entry(bits::extract(key, n, measured) as u64).or_insert(0) += 1;
        }
        let distribution = Distribution::from_counts(measured.len(), &counts)?;
        Ok(Measurement { distribution, counts: Some(counts), shots })
    }
}

/// Mix a master seed with a stream index (splitmix64 finalizer) so related
/// streams are decorrelated.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
