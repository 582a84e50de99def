use nalgebra::DVector;

use super::{per_circuit, split, RunContext, FULL_MAX_QUBITS};
use crate::calibration::Distribution;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SINGULAR_DET};
use crate::noise::{Circuit, Device, Phase};

/// Dense `2^n x 2^n` calibration from one circuit per basis state.
pub fn run_full(ctx: &RunContext<'_>, device: &mut Device, calibration_fraction: f64, force: bool) -> Result<Distribution> {
    let n = ctx.circuit.num_qubits();
    if n > FULL_MAX_QUBITS && !force {
        return Err(Error::Infeasible(format!(
            "full calibration needs 2^{n} circuits; limit is {FULL_MAX_QUBITS} qubits without force"
        )));
    }
    let dim = 1usize << n;
    let (cal, circ) = split(ctx.total_shots, calibration_fraction)?;
    let r = per_circuit(cal, dim as u64, "calibration")?;
    let prep = Circuit::basis(n, 0)?;
    let all: Vec<usize> = (0..n).collect();
    let mut m = Matrix::zeros(dim, dim);
    for c in 0..dim {
        let col = device.run(&prep, c as u64, &all, r, Phase::Calibration)?.distribution;
        for (k, w) in col.iter() {
            m[(k as usize, c)] = w;
        }
    }
    let raw = device.run_all(ctx.circuit, circ, Phase::Circuit)?.distribution;
    let inv = dense_inverse(&m).ok_or_else(|| Error::Singular { support: all.clone() })?;
    let mut v = DVector::zeros(dim);
    for (k, w) in raw.iter() {
        v[k as usize] = w;
    }
    let out = inv * v;
    let mut d = Distribution::from_entries(n, out.iter().enumerate().map(|(k, &w)| (k as u64, w)))?;
    d.finalize()?;
    Ok(d)
}

/// LU inverse, or the SVD pseudo-inverse when the matrix is near singular.
fn dense_inverse(m: &Matrix) -> Option<Matrix> {
    let lu = m.clone().lu();
    if lu.determinant().abs() > SINGULAR_DET {
        if let Some(inv) = lu.try_inverse() {
            return Some(inv);
        }
    }
    m.clone().pseudo_inverse(1e-12).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{correlated_channel, ideal_ghz, CorrelatedKind, Mode, NoiseSpec};
    use crate::topology::Architecture;

    #[test]
    fn exact_correlated_noise_is_undone() {
        let n = 3;
        let mut spec = NoiseSpec::uniform(n, 0.02, 0.06);
        spec.correlated.push(correlated_channel(vec![0, 2], CorrelatedKind::PairwiseFlip, 0.05).unwrap());
        let map = "linear:3".parse::<Architecture>().unwrap().generate().unwrap();
        let circuit = Circuit::new(ideal_ghz(n).unwrap());
        let ctx = RunContext { circuit: &circuit, map: &map, total_shots: 1600, seed: 0 };
        let mut dev = Device::new(n, &spec, Mode::Exact, 0).unwrap();
        let d = run_full(&ctx, &mut dev, 0.5, false).unwrap();
        assert!((d.get(0) - 0.5).abs() < 1e-9);
        assert!((d.get(7) - 0.5).abs() < 1e-9);
        assert_eq!(dev.ledger().calibration_circuits, 8);
    }

    #[test]
    fn guard_and_budget() {
        let map = "linear:15".parse::<Architecture>().unwrap().generate().unwrap();
        let circuit = Circuit::new(ideal_ghz(15).unwrap());
        let ctx = RunContext { circuit: &circuit, map: &map, total_shots: 100, seed: 0 };
        let mut dev = Device::new(15, &NoiseSpec::noiseless(), Mode::Exact, 0).unwrap();
        assert!(matches!(run_full(&ctx, &mut dev, 0.5, false), Err(Error::Infeasible(_))));
        assert!(matches!(run_full(&ctx, &mut dev, 0.5, true), Err(Error::Budget(_))));
    }

    #[test]
    fn pseudo_inverse_fallback() {
        let m = Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let p = dense_inverse(&m).unwrap();
        assert!((&m * &p * &m - &m).norm() < 1e-9);
    }
}
