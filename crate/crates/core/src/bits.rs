//! Bitstring conventions shared by every module.
//!
//! A measurement outcome over an `n`-qubit register is stored as a `u64` key
//! whose `n`-bit binary expansion, most significant bit first, reads qubit 0,
//! qubit 1, ..., qubit `n - 1`. The printed bitstring is that expansion, so
//! character `k` of `"0110"` is the value of qubit `k`.
//!
//! The same convention applies locally: on a support `[q0, q1, ..]` (ascending)
//! the local basis index has `q0` as its most significant bit. Tensor products
//! are therefore written in support order, `C_{q0} ⊗ C_{q1} ⊗ ..`.

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 64;

#[inline]
pub fn qubit_mask(n: usize, qubit: usize) -> u64 {
    debug_assert!(qubit < n && n <= MAX_QUBITS);
    1u64 << (n - 1 - qubit)
}

pub fn mask_of(n: usize, qubits: impl IntoIterator<Item = usize>) -> u64 {
    qubits.into_iter().fold(0, |m, q| m | qubit_mask(n, q))
}

#[inline]
pub fn bit(key: u64, n: usize, qubit: usize) -> bool {
    key & qubit_mask(n, qubit) != 0
}

/// Local basis index of `key` restricted to `support`.
#[inline]
pub fn extract(key: u64, n: usize, support: &[usize]) -> usize {
    support
        .iter()
        .fold(0usize, |acc, &q| (acc << 1) | bit(key, n, q) as usize)
}

/// Overwrite the bits of `support` in `key` with the local index `local`.
#[inline]
pub fn deposit(key: u64, n: usize, support: &[usize], local: usize) -> u64 {
    let p = support.len();
    let mut out = key;
    for (k, &q) in support.iter().enumerate() {
        let m = qubit_mask(n, q);
        if (local >> (p - 1 - k)) & 1 == 1 {
            out |= m;
        } else {
            out &= !m;
        }
    }
    out
}

pub fn to_bitstring(key: u64, n: usize) -> String {
    (0..n)
        .map(|q| if bit(key, n, q) { '1' } else { '0' })
        .collect()
}

pub fn local_bitstring(local: usize, p: usize) -> String {
    (0..p)
        .map(|k| if (local >> (p - 1 - k)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parse a bitstring into `(key, n)`.
pub fn parse_bitstring(s: &str) -> Result<(u64, usize)> {
    let n = s.len();
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::invalid(format!("bitstring length {n} outside 1..={MAX_QUBITS}")));
    }
    let mut key = 0u64;
    for c in s.chars() {
        key <<= 1;
        match c {
            '0' => {}
            '1' => key |= 1,
            other => return Err(Error::invalid(format!("invalid bitstring character `{other}`"))),
        }
    }
    Ok((key, n))
}

pub fn check_register(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::invalid(format!("register size {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_reads_qubit_zero_first() {
        let (key, n) = parse_bitstring("1000").unwrap();
        assert_eq!(n, 4);
        assert!(bit(key, n, 0));
        assert!(!bit(key, n, 3));
        assert_eq!(to_bitstring(key, n), "1000");
    }

    #[test]
    fn extract_and_deposit_follow_support_order() {
        let (key, n) = parse_bitstring("01101").unwrap();
        assert_eq!(extract(key, n, &[1, 4]), 0b11);
        assert_eq!(extract(key, n, &[0, 3]), 0b00);
        let k2 = deposit(key, n, &[0, 3], 0b10);
        assert_eq!(to_bitstring(k2, n), "11101");
        assert_eq!(local_bitstring(0b10, 2), "10");
    }

    #[test]
    fn rejects_bad_characters() {
        assert!(parse_bitstring("01x").is_err());
        assert!(parse_bitstring("").is_err());
    }
}
