use crate::calibration::Distribution;
use crate::error::{Error, Result};

fn same_register(a: &Distribution, b: &Distribution) -> Result<()> {
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::RegisterMismatch { required: b.num_qubits(), found: a.num_qubits() });
    }
    Ok(())
}

/// Mass of `observed` on the support of `verified`.
pub fn success_probability(observed: &Distribution, verified: &Distribution) -> Result<f64> {
    same_register(observed, verified)?;
    let p: f64 = observed.iter().filter(|&(k, _)| verified.get(k) > 0.0).map(|(_, w)| w).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// `Σ_s |a(s) − b(s)|` over the union of supports.
pub fn one_norm(a: &Distribution, b: &Distribution) -> Result<f64> {
    same_register(a, b)?;
    let mut total = 0.0;
    for (k, w) in a.iter() {
        total += (w - b.get(k)).abs();
    }
    for (k, w) in b.iter() {
        if !a.entries().contains_key(&k) {
            total += w.abs();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ideal_ghz;

    #[test]
    fn worked_examples() {
        let ghz = ideal_ghz(5).unwrap();
        assert_eq!(success_probability(&ghz, &ghz).unwrap(), 1.0);
        let uniform = Distribution::from_entries(5, (0..32).map(|k| (k, 1.0 / 32.0))).unwrap();
        assert!((success_probability(&uniform, &ghz).unwrap() - 0.0625).abs() < 1e-15);

        let a = Distribution::from_entries(2, [(0, 0.4), (3, 0.6)]).unwrap();
        assert!((one_norm(&a, &ideal_ghz(2).unwrap()).unwrap() - 0.2).abs() < 1e-15);
        let p = Distribution::point(2, 1).unwrap();
        let q = Distribution::point(2, 2).unwrap();
        assert_eq!(one_norm(&p, &q).unwrap(), 2.0);
        assert_eq!(one_norm(&p, &p).unwrap(), 0.0);
        assert!(one_norm(&p, &ghz).is_err());
    }
}
