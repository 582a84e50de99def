//! Small dense linear algebra on `nalgebra::DMatrix<f64>`.
//!
//! Everything here operates on matrices of dimension at most a few hundred;
//! the sparse, register-sized work lives in `calibration::sparse`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Determinant magnitude below which a factor is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;
/// Ridge added on a singular-factor retry.
pub const RIDGE: f64 = 1e-8;

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

pub fn frobenius(a: &Matrix) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scale each column to unit sum. Columns summing to zero are left untouched.
pub fn normalize_columns(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        let s: f64 = col.iter().sum();
        if s.abs() > 0.0 {
            col /= s;
        }
    }
}

pub fn max_column_sum_error(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Position of each qubit of `sub` inside `support`.
fn positions(sub: &[usize], support: &[usize]) -> Result<Vec<usize>> {
    sub.iter()
        .map(|q| {
            support
                .iter()
                .position(|s| s == q)
                .ok_or_else(|| Error::SupportMismatch(format!("qubit {q} not in support {support:?}")))
        })
        .collect()
}

#[inline]
fn pick(index: usize, width: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((index >> (width - 1 - p)) & 1))
}

/// Embed `m`, acting on the qubits `sub`, into the local space of `support`
/// (identity on the remaining qubits). Both lists use support ordering.
pub fn embed(m: &Matrix, sub: &[usize], support: &[usize]) -> Result<Matrix> {
    let dim_sub = 1usize << sub.len();
    if m.nrows() != dim_sub || m.ncols() != dim_sub {
        return Err(Error::DimensionMismatch { expected: dim_sub, found: m.nrows() });
    }
    let pos = positions(sub, support)?;
    let rest: Vec<usize> = (0..support.len()).filter(|p| !pos.contains(p)).collect();
    let width = support.len();
    let dim = 1usize << width;
    Ok(Matrix::from_fn(dim, dim, |r, c| {
        if pick(r, width, &rest) != pick(c, width, &rest) {
            0.0
        } else {
            m[(pick(r, width, &pos), pick(c, width, &pos))]
        }
    }))
}

/// Sum `m` (on `support`) over both row and column indices of every qubit not
/// in `keep`. The result is unnormalised and indexed in `keep` order.
pub fn marginal_sum(m: &Matrix, support: &[usize], keep: &[usize]) -> Result<Matrix> {
    let pos = positions(keep, support)?;
    let width = support.len();
    let dim = 1usize << keep.len();
    let mut out = Matrix::zeros(dim, dim);
    for c in 0..m.ncols() {
        let ck = pick(c, width, &pos);
        for r in 0..m.nrows() {
            out[(pick(r, width, &pos), ck)] += m[(r, c)];
        }
    }
    Ok(out)
}

/// Exact inverse, with a single ridge retry when `|det|` is below [`SINGULAR_DET`].
pub fn invert_with_ridge(m: &Matrix) -> Option<Matrix> {
    let attempt = |a: &Matrix| -> Option<Matrix> {
        if a.determinant().abs() > SINGULAR_DET {
            a.clone().try_inverse()
        } else {
            None
        }
    };
    attempt(m).or_else(|| {
        let ridged = m + Matrix::identity(m.nrows(), m.ncols()) * RIDGE;
        attempt(&ridged)
    })
}

/// Real matrix power `m^exponent` through the real Schur form and the block
/// Parlett recurrence. Real eigenvalues must be strictly positive; complex
/// pairs take the principal branch. The matrix must be diagonalisable.
pub fn matrix_power(m: &Matrix, exponent: f64) -> Result<Matrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    if exponent == 0.0 {
        return Ok(Matrix::identity(n, n));
    }
    if exponent == 1.0 {
        return Ok(m.clone());
    }
    let scale = m.amax().max(1.0);
    let (q, t) = m.clone().schur().unpack();

    // Diagonal blocks of the quasi-triangular factor as (start, size).
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)].abs() > 1e-12 * scale { 2 } else { 1 };
        blocks.push((i, size));
        i += size;
    }

    let mut fm = Matrix::zeros(n, n);
    for &(i, size) in &blocks {
        let block = t.view((i, i), (size, size)).into_owned();
        fm.view_mut((i, i), (size, size)).copy_from(&block_power(&block, exponent, scale)?);
    }
    for d in 1..blocks.len() {
        for bi in 0..blocks.len() - d {
            let (i, si) = blocks[bi];
            let (j, sj) = blocks[bi + d];
            let t_ii = t.view((i, i), (si, si));
            let t_jj = t.view((j, j), (sj, sj));
            let t_ij = t.view((i, j), (si, sj));
            let mut rhs = fm.view((i, i), (si, si)) * t_ij - t_ij * fm.view((j, j), (sj, sj));
            for &(k, sk) in &blocks[bi + 1..bi + d] {
                rhs += fm.view((i, k), (si, sk)) * t.view((k, j), (sk, sj))
                    - t.view((i, k), (si, sk)) * fm.view((k, j), (sk, sj));
            }
            // T_ii X - X T_jj = rhs, vectorised column-major.
            let dim = si * sj;
            let mut sys = Matrix::zeros(dim, dim);
            for c in 0..sj {
                for r in 0..si {
                    let row = c * si + r;
                    for rr in 0..si {
                        sys[(row, c * si + rr)] += t_ii[(r, rr)];
                    }
                    for cc in 0..sj {
                        sys[(row, cc * si + r)] -= t_jj[(cc, c)];
                    }
                }
            }
            let b = nalgebra::DVector::from_column_slice(rhs.as_slice());
            let x = if sys.determinant().abs() > (1e-10 * scale).powi(dim as i32) {
                sys.lu().solve(&b).ok_or_else(|| Error::MatrixPower("singular Sylvester block".into()))?
            } else if t_ij.amax() <= 1e-10 * scale && b.amax() <= 1e-10 * scale {
                nalgebra::DVector::zeros(dim)
            } else {
                return Err(Error::MatrixPower("matrix is not diagonalisable".into()));
            };
            fm.view_mut((i, j), (si, sj)).copy_from_slice(x.as_slice());
        }
    }
    Ok(&q * fm * q.transpose())
}

/// Power of a 1x1 or 2x2 diagonal block of the real Schur form.
fn block_power(b: &Matrix, exponent: f64, scale: f64) -> Result<Matrix> {
    if b.nrows() == 1 {
        let x = b[(0, 0)];
        if x <= 1e-14 * scale {
            return Err(Error::MatrixPower(format!("non-positive eigenvalue {x:e}")));
        }
        return Ok(Matrix::from_element(1, 1, x.powf(exponent)));
    }
    // Eigenvalues alpha +- i beta; f(B) = Re f(l) I + Im f(l) / beta (B - alpha I).
    let alpha = (b[(0, 0)] + b[(1, 1)]) / 2.0;
    let half_gap = (b[(0, 0)] - b[(1, 1)]) / 2.0;
    let disc = half_gap * half_gap + b[(0, 1)] * b[(1, 0)];
    if disc >= 0.0 {
        return Err(Error::MatrixPower("unreduced real 2x2 Schur block".into()));
    }
    let beta = (-disc).sqrt();
    let r = alpha.hypot(beta).powf(exponent);
    let theta = beta.atan2(alpha) * exponent;
    let id = Matrix::identity(2, 2);
    Ok(&id * (r * theta.cos()) + (b - &id * alpha) * (r * theta.sin() / beta))
}

/// [`matrix_power`] with convex mixing toward the identity when the spectrum
/// is unusable: `(1 - eps) m + eps I`, `eps` doubling from 1e-6 to 1e-2.
/// Returns the power and the mixing weight that was needed (0 if none).
pub fn matrix_power_regularized(m: &Matrix, exponent: f64) -> Result<(Matrix, f64)> {
    match matrix_power(m, exponent) {
        Ok(p) => Ok((p, 0.0)),
        Err(first) => {
            let id = Matrix::identity(m.nrows(), m.ncols());
            let mut eps = 1e-6;
            while eps <= 1e-2 {
                let mixed = m * (1.0 - eps) + &id * eps;
                if let Ok(p) = matrix_power(&mixed, exponent) {
                    return Ok((p, eps));
                }
                eps *= 2.0;
            }
            Err(first)
        }
    }
}
