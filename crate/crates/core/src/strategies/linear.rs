use super::{full_mask, per_circuit, split, RunContext};
use crate::calibration::{Direction, Distribution, Factor, DEFAULT_CULL};
use crate::calibration::SparseCalibration;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::noise::{Circuit, Device, Phase};

/// Tensor-product model from two calibration circuits, `I^n` and `X^n`.
pub fn run_linear(ctx: &RunContext<'_>, device: &mut Device, calibration_fraction: f64) -> Result<Distribution> {
    let n = ctx.circuit.num_qubits();
    let (cal, circ) = split(ctx.total_shots, calibration_fraction)?;
    let r = per_circuit(cal, 2, "calibration")?;
    let prep = Circuit::basis(n, 0)?;
    let all: Vec<usize> = (0..n).collect();
    let zeros = device.run(&prep, 0, &all, r, Phase::Calibration)?.distribution;
    let ones = device.run(&prep, full_mask(n), &all, r, Phase::Calibration)?.distribution;
    let factors = single_qubit_factors(&zeros, &ones, &all)?;
    let model = SparseCalibration::new(n, Direction::Forward, factors)?;
    let raw = device.run_all(ctx.circuit, circ, Phase::Circuit)?.distribution;
    model.invert()?.apply(&raw, DEFAULT_CULL)
}

/// Per-qubit matrices from the all-zeros and all-ones outcome tables.
pub(crate) fn single_qubit_factors(zeros: &Distribution, ones: &Distribution, qubits: &[usize]) -> Result<Vec<Factor>> {
    qubits
        .iter()
        .map(|&q| {
            let z = zeros.marginal(&[q])?;
            let o = ones.marginal(&[q])?;
            let m = Matrix::from_row_slice(2, 2, &[z.get(0), o.get(0), z.get(1), o.get(1)]);
            Factor::new(vec![q], m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ideal_ghz, Mode, NoiseSpec};
    use crate::strategies::{run_method, StrategyConfig};
    use crate::topology::Architecture;

    #[test]
    fn exact_independent_noise_is_undone() {
        let n = 4;
        let spec = NoiseSpec::uniform(n, 0.03, 0.07);
        let map = "linear:4".parse::<Architecture>().unwrap().generate().unwrap();
        let circuit = Circuit::new(ideal_ghz(n).unwrap());
        let ctx = RunContext { circuit: &circuit, map: &map, total_shots: 1000, seed: 0 };
        let mut dev = Device::new(n, &spec, Mode::Exact, 0).unwrap();
        let out = run_method(&StrategyConfig::default_for(crate::strategies::MethodId::Linear), &ctx, &mut dev).unwrap();
        assert!((out.mitigated.get(0) - 0.5).abs() < 1e-9);
        assert!((out.mitigated.get(0b1111) - 0.5).abs() < 1e-9);
        assert_eq!(out.ledger.calibration_circuits, 2);
        assert!(out.ledger.total_shots() <= 1000);
    }
}
