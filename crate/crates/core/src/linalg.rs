//! Dense complex helpers shared by the verifiers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `‖a − b‖_max / max(1, ‖a‖_max)`: the residual measure used by every check.
pub fn residual(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "residual of mismatched shapes");
    let diff = a.iter().zip(b.iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()));
    diff / max_abs(a).max(1.0)
}

pub fn scalar_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

fn norm_one(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse with a 1-norm condition number guard.
pub fn inverse_guarded(m: &CMatrix, cond_limit: f64, pivot: usize) -> Result<CMatrix> {
    let inverse = m.clone().lu().try_inverse().ok_or(Error::Singular { pivot, cond: f64::INFINITY })?;
    let cond = norm_one(m) * norm_one(&inverse);
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::Singular { pivot, cond });
    }
    Ok(inverse)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn is_scalar(m: &CMatrix) -> (Complex64, f64) {
    let dim = m.nrows();
    let scalar = m.trace() / dim as f64;
    (scalar, residual(m, &(identity(dim) * scalar)))
}
