use std::collections::BTreeMap;
use std::sync::mpsc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{one_norm, success_probability};
use super::output::{RecordSink, ResultRecord};
use crate::error::Result;
use crate::noise::{derive_seed, Circuit, Device, NoiseSpec};
use crate::strategies::{run_method, RunContext, StrategyConfig};
use crate::topology::CouplingMap;

const NOISE_STREAM: u64 = 0;
const METHOD_STREAM: u64 = 0x100;

/// Seed of trial `trial` on architecture `arch`.
pub fn trial_seed(master: u64, arch: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, arch as u64), trial as u64)
}

struct Job {
    arch: usize,
    trial: usize,
}

struct Prepared {
    label: String,
    map: CouplingMap,
}

/// Run every (architecture, trial, method) combination and return the
/// records in that order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    run_experiment_with(config, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Like [`run_experiment`], streaming records to `sink`.
pub fn run_experiment_to(config: &ExperimentConfig, sink: &mut RecordSink) -> Result<usize> {
    let mut count = 0;
    run_experiment_with(config, |r| {
        count += 1;
        sink.write(r)
    })?;
    Ok(count)
}

/// Trials run in parallel; `emit` sees records in deterministic order, each
/// as soon as every earlier record has been emitted.
pub fn run_experiment_with(config: &ExperimentConfig, mut emit: impl FnMut(&ResultRecord) -> Result<()>) -> Result<()> {
    config.validate()?;
    let archs: Vec<Prepared> = config
        .architectures
        .iter()
        .map(|a| Ok(Prepared { label: a.label(), map: a.load()? }))
        .collect::<Result<_>>()?;
    let jobs: Vec<Job> = (0..archs.len())
        .flat_map(|arch| (0..config.trials).map(move |trial| Job { arch, trial }))
        .collect();

    let (tx, rx) = mpsc::channel::<(usize, Vec<ResultRecord>)>();
    let archs = &archs;
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, job)| {
                let _ = tx.send((i, run_trial(config, &archs[job.arch], job)));
            });
        });
        let mut pending: BTreeMap<usize, Vec<ResultRecord>> = BTreeMap::new();
        let mut next = 0usize;
        for (i, recs) in rx {
            pending.insert(i, recs);
            while let Some(recs) = pending.remove(&next) {
                for r in &recs {
                    emit(r)?;
                }
                next += 1;
            }
        }
        Ok(())
    })
}

fn run_trial(config: &ExperimentConfig, arch: &Prepared, job: &Job) -> Vec<ResultRecord> {
    let seed = trial_seed(config.seed, job.arch, job.trial);
    let n = arch.map.num_qubits();
    let setup = || -> Result<(NoiseSpec, Circuit)> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, NOISE_STREAM));
        let spec = config.noise.build(&arch.map, &mut rng)?;
        let gate_flip = config.gate_flip.or(spec.gate_flip);
        Ok((spec, config.circuit.build(&arch.map, gate_flip)?))
    };
    let base = |method: &StrategyConfig| ResultRecord {
        method: method.id(),
        architecture: arch.label.clone(),
        n,
        trial: job.trial,
        seed,
        success_probability: None,
        one_norm: None,
        ledger: Default::default(),
        wall_ms: 0,
        diagnostics: Vec::new(),
        error: None,
    };
    let (spec, circuit) = match setup() {
        Ok(s) => s,
        Err(e) => {
            return config
                .methods
                .iter()
                .map(|m| ResultRecord { error: Some(e.to_string()), ..base(m) })
                .collect()
        }
    };
    config
        .methods
        .iter()
        .map(|method| {
            let mut rec = base(method);
            let stream = derive_seed(seed, METHOD_STREAM + method.id() as u64);
            let start = Instant::now();
            let result = Device::new(n, &spec, config.mode, stream).and_then(|mut device| {
                let ctx = RunContext {
                    circuit: &circuit,
                    map: &arch.map,
                    total_shots: config.shots,
                    seed: derive_seed(stream, 1),
                };
                let res = run_method(method, &ctx, &mut device)?;
                let sp = success_probability(&res.mitigated, &circuit.ideal)?;
                let norm = one_norm(&res.mitigated, &circuit.ideal)?;
                Ok((res, sp, norm))
            });
            if config.timing {
                rec.wall_ms = start.elapsed().as_millis() as u64;
            }
            match result {
                Ok((res, sp, norm)) => {
                    rec.success_probability = Some(sp);
                    rec.one_norm = Some(norm);
                    rec.ledger = res.ledger;
                    rec.diagnostics = res.diagnostics;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}
