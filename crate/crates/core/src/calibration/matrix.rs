use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Largest patch a calibration matrix may span.
pub const MAX_PATCH: usize = 4;
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Column-stochastic matrix over an ascending qubit support.
///
/// Entry `[r, c]` is the probability of observing local state `r` when local
/// state `c` was prepared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct CalibrationMatrix {
    support: Vec<usize>,
    matrix: Matrix,
}

/// Row-major on-disk form.
#[derive(Serialize, Deserialize)]
struct RawMatrix {
    support: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for CalibrationMatrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        let dim = 1usize << raw.support.len().min(MAX_PATCH + 1);
        if raw.data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: raw.data.len() });
        }
        CalibrationMatrix::new(raw.support, Matrix::from_row_slice(dim, dim, &raw.data))
    }
}

impl From<CalibrationMatrix> for RawMatrix {
    fn from(c: CalibrationMatrix) -> Self {
        let data = c.row_major();
        RawMatrix { support: c.support, data }
    }
}

pub(crate) fn check_support(support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Empty("support"));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::SupportMismatch(format!("support {support:?} is not strictly ascending")));
    }
    Ok(())
}

impl CalibrationMatrix {
    pub fn new(support: Vec<usize>, matrix: Matrix) -> Result<Self> {
        check_support(&support)?;
        if support.len() > MAX_PATCH {
            return Err(Error::invalid(format!("patch of {} qubits exceeds {MAX_PATCH}", support.len())));
        }
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        if matrix.iter().any(|&x| !x.is_finite() || x < -1e-12) {
            return Err(Error::invalid("calibration entries must be finite and nonnegative"));
        }
        let err = linalg::max_column_sum_error(&matrix);
        if err > STOCHASTIC_TOL {
            return Err(Error::invalid(format!("columns do not sum to 1 (max error {err:e})")));
        }
        Ok(CalibrationMatrix { support, matrix })
    }

    pub fn identity(support: Vec<usize>) -> Result<Self> {
        let dim = 1usize << support.len();
        Self::new(support, Matrix::identity(dim, dim))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_parts(self) -> (Vec<usize>, Matrix) {
        (self.support, self.matrix)
    }

    pub fn num_qubits(&self) -> usize {
        self.support.len()
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.matrix.transpose().iter().copied().collect()
    }

    /// Tensor product with a channel on a disjoint support. The result lives
    /// on the sorted union, so operand order does not matter.
    pub fn tensor(&self, other: &CalibrationMatrix) -> Result<Self> {
        if self.support.iter().any(|q| other.support.contains(q)) {
            return Err(Error::SupportMismatch("tensor factors overlap".into()));
        }
        let mut support: Vec<usize> = self.support.iter().chain(&other.support).copied().collect();
        support.sort_unstable();
        let a = linalg::embed(&self.matrix, &self.support, &support)?;
        let b = linalg::embed(&other.matrix, &other.support, &support)?;
        Self::new(support, a * b)
    }

    /// Marginal channel on `keep`: sum over observed and prepared states of
    /// the discarded qubits, then rescale every column to unit sum.
    ///
    /// Summing over prepared states weights them uniformly, so a product
    /// channel returns its factor exactly and a joint-flip channel returns its
    /// single-qubit flip marginal.
    pub fn normalized_partial_trace(&self, keep: &[usize]) -> Result<Self> {
        check_support(keep)?;
        if keep.len() >= self.support.len() {
            return Err(Error::SupportMismatch(format!(
                "keep {keep:?} must be a proper subset of {:?}",
                self.support
            )));
        }
        self.marginal(keep)
    }

    /// Like [`normalized_partial_trace`](Self::normalized_partial_trace) but
    /// also accepts `keep == support`.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        check_support(keep)?;
        if keep == self.support.as_slice() {
            return Ok(self.clone());
        }
        let mut m = linalg::marginal_sum(&self.matrix, &self.support, keep)?;
        linalg::normalize_columns(&mut m);
        Self::new(keep.to_vec(), m)
    }

    /// Principal power `C^exponent` for `exponent` in (0, 1].
    pub fn fractional_power(&self, exponent: f64) -> Result<Matrix> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::invalid(format!("exponent {exponent} outside (0, 1]")));
        }
        Ok(linalg::matrix_power_regularized(&self.matrix, exponent)?.0)
    }

    /// Order-parameter adjustment for a single shared qubit.
    pub fn order_adjust(&self, shared: usize, v: usize, v_a: usize) -> Result<Matrix> {
        self.order_adjust_multi(&[SharedOrder { qubit: shared, v, v_a }])
    }

    /// Order-parameter adjustment for any number of shared qubits:
    /// `(⊗ L_q)^{-1} C (⊗ R_q)^{-1}` with `L_q = C_q^{(v-1-v_a)/v}` and
    /// `R_q = C_q^{v_a/v}`, where `C_q` is this patch's marginal on `q`.
    /// Unshared qubits take the identity.
    pub fn order_adjust_multi(&self, shared: &[SharedOrder]) -> Result<Matrix> {
        let width = self.support.len();
        let dim = 1usize << width;
        let mut left = Matrix::identity(dim, dim);
        let mut right = Matrix::identity(dim, dim);
        for s in shared {
            if s.v == 0 || s.v_a >= s.v {
                return Err(Error::invalid(format!(
                    "order parameter {} out of range for multiplicity {}",
                    s.v_a, s.v
                )));
            }
            if !self.support.contains(&s.qubit) {
                return Err(Error::SupportMismatch(format!(
                    "shared qubit {} not in {:?}",
                    s.qubit, self.support
                )));
            }
            if s.v == 1 {
                continue;
            }
            let cq = if width == 1 { self.clone() } else { self.marginal(&[s.qubit])? };
            let v = s.v as f64;
            let l_exp = (s.v - 1 - s.v_a) as f64 / v;
            let r_exp = s.v_a as f64 / v;
            let l_inv = neg_power(&cq, l_exp)?;
            let r_inv = neg_power(&cq, r_exp)?;
            left *= linalg::embed(&l_inv, &[s.qubit], &self.support)?;
            right *= linalg::embed(&r_inv, &[s.qubit], &self.support)?;
        }
        Ok(left * &self.matrix * right)
    }
}

fn neg_power(c: &CalibrationMatrix, exponent: f64) -> Result<Matrix> {
    let dim = c.matrix.nrows();
    if exponent == 0.0 {
        return Ok(Matrix::identity(dim, dim));
    }
    let (p, _) = linalg::matrix_power_regularized(&c.matrix, exponent).map_err(|e| match e {
        Error::MatrixPower(_) => Error::Singular { support: c.support.clone() },
        other => other,
    })?;
    linalg::invert_with_ridge(&p).ok_or_else(|| Error::Singular { support: c.support.clone() })
}

/// Multiplicity `v` and order parameter `v_a` of a qubit shared between patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedOrder {
    pub qubit: usize,
    pub v: usize,
    pub v_a: usize,
}
