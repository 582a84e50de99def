//! Command-line front end: architectures, patch plans, error maps,
//! calibration stores, mitigation, benchmark sweeps and the X-chain study.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cmc::bench::{run_experiment_with, CalibrationStore, ExperimentConfig, OutputFormat, RecordSink, StorePlan};
use cmc::calibration::{estimate_matrix, CalibrationMatrix, CountsRecord, Distribution};
use cmc::noise::{x_chain_experiment, Device, Mode, NoiseSpec, Phase, ReadoutRates};
use cmc::strategies::calibrate_patches;
use cmc::topology::{correlation_weights, err_map, greedy_patch_plan, plan_patches, Architecture, CouplingMap, ErrMap};

#[derive(Parser)]
#[command(name = "cmc", version, about = "Coupling map calibration for measurement-error mitigation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shot budget.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Trials per configuration.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tabular output format.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: cmc::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Emit a coupling map as JSON.
    GenArch {
        /// Short form such as `grid:4x4`, `heavy_hex:1x2:16`, `random:100:4:7` or a preset name.
        #[arg(long)]
        arch: String,
    },
    /// Group coupling-map edges into simultaneously calibratable patches.
    PatchPlan {
        #[arg(long)]
        arch: String,
        /// Minimum distance between patches in a group.
        #[arg(short = 'k', long, default_value_t = 1)]
        separation: usize,
    },
    /// Build an error-correlation map from one- and two-qubit counts.
    ErrMap {
        /// Counts records, or a calibration store holding them.
        #[arg(long)]
        counts: PathBuf,
        /// Edge cap; defaults to the number of qubits seen.
        #[arg(long)]
        max_edges: Option<usize>,
    },
    /// Calibrate patches and save a calibration store.
    Calibrate {
        #[arg(long)]
        arch: String,
        /// Noise spec JSON for the simulated device; random 2-8% rates when absent.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Estimate from these counts records instead of simulating.
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Patch along this error map instead of the coupling map.
        #[arg(long)]
        err_map: Option<PathBuf>,
        #[arg(short = 'k', long, default_value_t = 1)]
        separation: usize,
        #[arg(long, default_value = "simulated")]
        device: String,
    },
    /// Apply a calibration store to measured counts.
    Mitigate {
        #[arg(long)]
        store: PathBuf,
        /// JSON object of bitstring -> count over the measured qubits.
        #[arg(long)]
        counts: PathBuf,
        /// Comma-separated measured qubits; all store qubits when absent.
        #[arg(long, value_delimiter = ',')]
        measured: Option<Vec<usize>>,
    },
    /// Run a benchmark sweep from `--config`.
    Bench,
    /// Misread rates after chains of X gates on one qubit.
    XChain {
        #[arg(long, default_value_t = 50)]
        depth: usize,
        #[arg(long, default_value_t = 0.02)]
        p01: f64,
        #[arg(long, default_value_t = 0.08)]
        p10: f64,
        #[arg(long, default_value_t = 0.0)]
        gate_flip: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn output(path: Option<&Path>) -> AnyResult<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> AnyResult<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn load_map(arch: &str) -> AnyResult<CouplingMap> {
    Ok(arch.parse::<Architecture>()?.generate()?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> AnyResult<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn run(cli: Cli) -> AnyResult<()> {
    let c = cli.common;
    let out = c.out.as_deref();
    match cli.command {
        Command::GenArch { arch } => write_json(&load_map(&arch)?, out),
        Command::PatchPlan { arch, separation } => {
            let map = load_map(&arch)?;
            let plan = greedy_patch_plan(&map, separation)?;
            log::info!(
                "{} edges -> {} groups, {} circuits (per-edge: {})",
                map.num_edges(),
                plan.num_groups(),
                plan.num_circuits(),
                4 * map.num_edges()
            );
            write_json(&plan, out)
        }
        Command::ErrMap { counts, max_edges } => {
            let records = load_records(&counts)?;
            let mut by_support: BTreeMap<Vec<usize>, Vec<CountsRecord>> = BTreeMap::new();
            for r in records {
                by_support.entry(r.support.clone()).or_default().push(r);
            }
            let mut singles = BTreeMap::new();
            let mut pairs = BTreeMap::new();
            for (support, recs) in &by_support {
                let m: CalibrationMatrix = estimate_matrix(recs)?;
                match support.as_slice() {
                    [q] => {
                        singles.insert(*q, m);
                    }
                    [a, b] => {
                        pairs.insert((*a, *b), m);
                    }
                    _ => log::warn!("skipping counts on {support:?}"),
                }
            }
            // Pair-only inputs (such as a patch calibration store) supply their own marginals.
            for (&(a, b), m) in &pairs {
                for q in [a, b] {
                    if let std::collections::btree_map::Entry::Vacant(slot) = singles.entry(q) {
                        log::info!("qubit {q}: no single-qubit counts, using the marginal of patch ({a}, {b})");
                        slot.insert(m.normalized_partial_trace(&[q])?);
                    }
                }
            }
            let weights = correlation_weights(&singles, &pairs, None)?;
            let map = err_map(&weights, max_edges.unwrap_or(singles.len().max(1)))?;
            #[derive(Serialize)]
            struct Report {
                weights: cmc::topology::CorrelationWeights,
                err_map: ErrMap,
            }
            write_json(&Report { weights, err_map: map }, out)
        }
        Command::Calibrate { arch, noise, counts, err_map: err_file, separation, device } => {
            let map = load_map(&arch)?;
            let n = map.num_qubits();
            let plan = match &err_file {
                Some(path) => {
                    let em: ErrMap = read_json(path)?;
                    let plan = plan_patches(&em.edges, &em.to_coupling_map(n)?, separation)?;
                    StorePlan::ErrMap { err_map: em, plan }
                }
                None => StorePlan::CouplingMap { plan: greedy_patch_plan(&map, separation)? },
            };
            let stamp = chrono::Utc::now().to_rfc3339();
            let store = match counts {
                Some(path) => CalibrationStore::from_records(device, stamp, n, plan, load_records(&path)?)?,
                None => {
                    let seed = c.seed.unwrap_or(0);
                    let spec: NoiseSpec = match noise {
                        Some(path) => read_json(&path)?,
                        None => NoiseSpec::random_state_dependent(n, 0.02, 0.08, &mut ChaCha8Rng::seed_from_u64(seed)),
                    };
                    let mut dev = Device::new(n, &spec, Mode::Sampled, seed)?;
                    let circuits = plan.patch_plan().num_circuits() as u64;
                    let shots = c.shots.unwrap_or(8000) / circuits;
                    if shots == 0 {
                        return Err(format!("{circuits} calibration circuits need at least {circuits} shots").into());
                    }
                    let cal = calibrate_patches(&mut dev, plan.patch_plan(), shots, Phase::Calibration)?;
                    CalibrationStore::new(device, stamp, n, plan, cal)?
                }
            };
            match out {
                Some(p) => Ok(store.save(p)?),
                None => {
                    println!("{}", store.to_json()?);
                    Ok(())
                }
            }
        }
        Command::Mitigate { store, counts, measured } => {
            let store = CalibrationStore::load(&store)?;
            let counts: BTreeMap<String, u64> = read_json(&counts)?;
            let raw = Distribution::from_bitstring_counts(&counts)?;
            let measured = measured.unwrap_or_else(|| (0..store.num_qubits).collect());
            if measured.len() != raw.num_qubits() {
                return Err(format!("{} measured qubits but {}-bit counts", measured.len(), raw.num_qubits()).into());
            }
            write_json(&store.mitigate(&raw, &measured)?, out)
        }
        Command::Bench => {
            let path = c.config.as_deref().ok_or("bench needs --config")?;
            let mut config = ExperimentConfig::load(path)?;
            if let Some(s) = c.seed {
                config.seed = s;
            }
            if let Some(s) = c.shots {
                config.shots = s;
            }
            if let Some(t) = c.trials {
                config.trials = t;
            }
            if let Some(f) = c.format {
                config.format = f;
            }
            let target = c.out.or_else(|| config.output.clone());
            config.validate()?;
            let mut sink = RecordSink::new(output(target.as_deref())?, config.format)?;
            let mut summary: BTreeMap<(String, String), (f64, usize, usize)> = BTreeMap::new();
            run_experiment_with(&config, |r| {
                let e = summary.entry((r.architecture.clone(), r.method.to_string())).or_default();
                match r.one_norm {
                    Some(x) => {
                        e.0 += x;
                        e.1 += 1;
                    }
                    None => e.2 += 1,
                }
                sink.write(r)
            })?;
            for ((arch, method), (sum, ok, failed)) in summary {
                let mean = if ok > 0 { sum / ok as f64 } else { f64::NAN };
                eprintln!("{arch:>24} {method:>8}  mean one-norm {mean:.4}  ({ok} ok, {failed} failed)");
            }
            Ok(())
        }
        Command::XChain { depth, p01, p10, gate_flip } => {
            let points =
                x_chain_experiment(depth, ReadoutRates { p01, p10 }, gate_flip, c.shots.unwrap_or(4000), c.seed.unwrap_or(0))?;
            match c.format.unwrap_or_default() {
                OutputFormat::Json => write_json(&points, out),
                OutputFormat::Csv => {
                    let mut w = csv::Writer::from_writer(output(out)?);
                    for p in &points {
                        w.serialize(p)?;
                    }
                    w.flush()?;
                    Ok(())
                }
            }
        }
    }
}

fn load_records(path: &Path) -> AnyResult<Vec<CountsRecord>> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(store) = CalibrationStore::from_json(&text) {
        return Ok(store.records);
    }
    Ok(serde_json::from_str(&text)?)
}
