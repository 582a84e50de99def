use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::Distribution;
use crate::error::{Error, Result};
use crate::noise::{correlated_channel, correlated_layer, Circuit, CorrelatedKind, Mode, NoiseSpec};
use crate::strategies::StrategyConfig;
use crate::topology::{Architecture, CouplingMap};

/// Where a coupling map comes from: a generator (`{"kind": "grid", ...}`),
/// its short form (`"heavy_hex:1x2:16"`), or a coupling-map JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchitectureSource {
    Generator(Architecture),
    Short(String),
    File { coupling_map_file: PathBuf },
}

impl ArchitectureSource {
    pub fn load(&self) -> Result<CouplingMap> {
        match self {
            ArchitectureSource::Generator(a) => a.generate(),
            ArchitectureSource::Short(s) => s.parse::<Architecture>()?.generate(),
            ArchitectureSource::File { coupling_map_file } => {
                Ok(serde_json::from_str(&std::fs::read_to_string(coupling_map_file)?)?)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ArchitectureSource::Generator(a) => serde_json::to_string(a).unwrap_or_default(),
            ArchitectureSource::Short(s) => s.clone(),
            ArchitectureSource::File { coupling_map_file } => coupling_map_file.display().to_string(),
        }
    }
}

/// Device noise, drawn afresh for each trial where it is random.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// The same spec for every trial; its qubit indices must fit every architecture.
    Fixed { spec: NoiseSpec },
    File { path: PathBuf },
    Uniform { p01: f64, p10: f64 },
    /// Per-qubit `p01`, `p10` from `U[lo, hi]`.
    RandomStateDependent { lo: f64, hi: f64 },
    /// One correlated channel of `correlation` type on every qubit subset of its arity.
    CorrelatedLayer { correlation: CorrelatedKind, p: f64 },
    /// Random per-qubit rates plus a pairwise flip with probability `p` on every coupling-map edge.
    EdgeCorrelated { lo: f64, hi: f64, p: f64 },
}

impl NoiseModel {
    pub fn build(&self, map: &CouplingMap, rng: &mut impl Rng) -> Result<NoiseSpec> {
        let n = map.num_qubits();
        let spec = match self {
            NoiseModel::Fixed { spec } => spec.clone(),
            NoiseModel::File { path } => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            NoiseModel::Uniform { p01, p10 } => NoiseSpec::uniform(n, *p01, *p10),
            NoiseModel::RandomStateDependent { lo, hi } => {
                check_range(*lo, *hi)?;
                NoiseSpec::random_state_dependent(n, *lo, *hi, rng)
            }
            NoiseModel::CorrelatedLayer { correlation, p } => {
                NoiseSpec { correlated: correlated_layer(n, *correlation, *p)?, ..NoiseSpec::default() }
            }
            NoiseModel::EdgeCorrelated { lo, hi, p } => {
                check_range(*lo, *hi)?;
                let mut spec = NoiseSpec::random_state_dependent(n, *lo, *hi, rng);
                for &(a, b) in map.edges() {
                    spec.correlated.push(correlated_channel(vec![a, b], CorrelatedKind::PairwiseFlip, *p)?);
                }
                spec
            }
        };
        spec.validate(n)?;
        Ok(spec)
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::invalid(format!("rate range [{lo}, {hi}] is not inside [0, 1]")));
    }
    Ok(())
}

/// Benchmark circuit family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    /// GHZ prepared along the BFS tree of the coupling map.
    #[default]
    Ghz,
    /// `X` on every qubit: the ideal outcome is `1^n`.
    Ones,
}

impl CircuitKind {
    pub fn build(self, map: &CouplingMap, gate_flip: Option<f64>) -> Result<Circuit> {
        match self {
            CircuitKind::Ghz => Circuit::ghz(map, gate_flip),
            CircuitKind::Ones => {
                let n = map.num_qubits();
                Ok(Circuit::new(Distribution::point(n, crate::strategies::full_mask(n))?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!("unknown format `{s}`"))),
        }
    }
}

fn default_trials() -> usize {
    50
}
fn default_shots() -> u64 {
    16_000
}

/// One benchmark sweep. Every method gets the same `shots` budget in every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub architectures: Vec<ArchitectureSource>,
    pub noise: NoiseModel,
    pub methods: Vec<StrategyConfig>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub circuit: CircuitKind,
    /// Two-qubit gate flip probability in the benchmark circuit.
    #[serde(default)]
    pub gate_flip: Option<f64>,
    /// Record wall-clock time per run. Off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_mode() -> Mode {
    Mode::Sampled
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.shots == 0 {
            return Err(Error::invalid("shots must be at least 1"));
        }
        if self.architectures.is_empty() {
            return Err(Error::Empty("architectures"));
        }
        if self.methods.is_empty() {
            return Err(Error::Empty("methods"));
        }
        let mut files: Vec<&Path> = self
            .architectures
            .iter()
            .filter_map(|a| match a {
                ArchitectureSource::File { coupling_map_file } => Some(coupling_map_file.as_path()),
                _ => None,
            })
            .collect();
        if let NoiseModel::File { path } = &self.noise {
            files.push(path);
        }
        if let Some(f) = files.into_iter().find(|f| !f.exists()) {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} does not exist", f.display()),
            )));
        }
        Ok(())
    }
}
