use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::ReadoutRates;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XChainPoint {
    pub depth: usize,
    /// Noise-free outcome after `depth` X gates.
    pub ideal: u8,
    pub error_rate: f64,
    /// Closed-form error probability for this depth.
    pub expected: f64,
    /// Binomial standard deviation of `error_rate` at the shot count used.
    pub sigma: f64,
}

/// Probability that the bit read out differs from `depth mod 2` when every X
/// gate flips the bit with probability `g` before a readout with `rates`.
pub fn x_chain_expected(depth: usize, rates: ReadoutRates, gate_flip: f64) -> f64 {
    let wrong = (1.0 - (1.0 - 2.0 * gate_flip).powi(depth as i32)) / 2.0;
    let (stay, other) = if depth.is_multiple_of(2) { (rates.p01, rates.p10) } else { (rates.p10, rates.p01) };
    (1.0 - wrong) * stay + wrong * (1.0 - other)
}

/// Misread frequency after 1..=depth_max X gates on one qubit.
pub fn x_chain_experiment(
    depth_max: usize,
    rates: ReadoutRates,
    gate_flip: f64,
    shots: u64,
    seed: u64,
) -> Result<Vec<XChainPoint>> {
    if depth_max == 0 || shots == 0 {
        return Err(Error::invalid("depth_max and shots must be positive"));
    }
    for p in [rates.p01, rates.p10, gate_flip] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{p} is not a probability")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=depth_max)
        .map(|depth| {
            let ideal = (depth % 2) as u8;
            let mut errors = 0u64;
            for _ in 0..shots {
                let mut bit = 0u8;
                for _ in 0..depth {
                    bit ^= 1;
                    if gate_flip > 0.0 && rng.gen::<f64>() < gate_flip {
                        bit ^= 1;
                    }
                }
                let misread = if bit == 0 { rates.p01 } else { rates.p10 };
                if rng.gen::<f64>() < misread {
                    bit ^= 1;
                }
                errors += u64::from(bit != ideal);
            }
            let expected = x_chain_expected(depth, rates, gate_flip);
            Ok(XChainPoint {
                depth,
                ideal,
                error_rate: errors as f64 / shots as f64,
                expected,
                sigma: (expected * (1.0 - expected) / shots as f64).sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_chain_has_no_errors() {
        let pts = x_chain_experiment(6, ReadoutRates { p01: 0.0, p10: 0.0 }, 0.0, 200, 1).unwrap();
        assert!(pts.iter().all(|p| p.error_rate == 0.0));
    }

    #[test]
    fn closed_form_parity_bands() {
        let r = ReadoutRates { p01: 0.02, p10: 0.08 };
        assert!((x_chain_expected(1, r, 0.0) - 0.08).abs() < 1e-15);
        assert!((x_chain_expected(2, r, 0.0) - 0.02).abs() < 1e-15);
        // Gate noise raises both error bands by the same amount, so the
        // probabilities of reading 1 after odd and even depths converge.
        let p_one = |d: usize| {
            let e = x_chain_expected(d, r, 0.001);
            if d % 2 == 1 { 1.0 - e } else { e }
        };
        assert!(p_one(49) - p_one(50) < p_one(1) - p_one(2));
        assert!(x_chain_expected(50, r, 0.001) > x_chain_expected(2, r, 0.001));
        assert!(x_chain_expected(49, r, 0.001) > x_chain_expected(1, r, 0.001));
    }

    #[test]
    fn closed_form_matches_two_step_markov_chain() {
        // depth 2: the bit is wrong iff exactly one of the two gates misfired
        let g: f64 = 0.1;
        let r = ReadoutRates { p01: 0.03, p10: 0.07 };
        let wrong = 2.0 * g * (1.0 - g);
        let by_hand = (1.0 - wrong) * 0.03 + wrong * (1.0 - 0.07);
        assert!((x_chain_expected(2, r, g) - by_hand).abs() < 1e-15);
    }
}
