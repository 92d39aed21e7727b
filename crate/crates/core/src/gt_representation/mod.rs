//! The Gelfand-Tsetlin representation of the elliptic quantum group on the
//! tensor product `V_{z_1} ⊗ ⋯ ⊗ V_{z_n}` of evaluation modules.
//!
//! Vectors live in `C^{N^n}` with the standard basis ordered by
//! [`PartitionIndex::basis_index`](crate::combinatorics::PartitionIndex::basis_index).

mod basis;
mod currents;
mod loperator;
mod relations;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use basis::{
    braid_residual, check_x_matrix, gt_basis, gt_frame, gt_vectors, s_tilde, s_tilde_square_residual, x_matrix_via_weights,
    DescentPath, GtBasis,
};
pub use currents::{
    act_half_current, cartan_eigenvalue, e_action, e_current, f_action, f_current, half_current_matrix, k_eigenvalue,
    CurrentNormalization, DeltaOperator, Expansion, HalfCurrent,
};
pub use loperator::{
    check_center, gauss_at, gauss_extract, k_commutation_residual, l_operator, reassembly_residual, verify_rll,
    verify_rll_with, CenterReport, GaussComponents, LOperator, DEFAULT_PIVOT_COND,
};
pub use relations::{
    ef_commutators, exchange_relations, half_current_oracle, highest_weight, partial_fraction_residual,
    partial_fraction_residue_residual, residue_by_contour, worked_example, CommutatorReport, HighestWeightReport,
    RelationResidual, WorkedExample, CONTOUR_POINTS, CONTOUR_RADIUS,
};

/// Dense operators on `V^{⊗n}`.
pub type OperatorMatrix = CMatrix;

/// Largest `N^n` for which dense operators are built.
pub const MAX_MODULE_DIM: usize = 729;

/// Coefficients over the `N^n` basis words (standard or GT, per context) and
/// the `h`-weight they carry.
#[derive(Debug, Clone, Serialize)]
pub struct ModuleVector {
    pub coefficients: Vec<Complex64>,
    pub weight: Vec<i64>,
}

pub(crate) fn check_module_size(rank: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("need at least one site"));
    }
    let dim = (rank as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > MAX_MODULE_DIM as u128 {
        return Err(Error::Resource(format!("module dimension {rank}^{n} exceeds {MAX_MODULE_DIM}")));
    }
    Ok(())
}

pub(crate) fn word_index(rank: usize, word: &[u8]) -> usize {
    word.iter().fold(0, |acc, &m| acc * rank + (m as usize - 1))
}

pub(crate) fn decode_word(rank: usize, n: usize, mut index: usize) -> Vec<u8> {
    let mut word = vec![0u8; n];
    for slot in word.iter_mut().rev() {
        *slot = (index % rank) as u8 + 1;
        index /= rank;
    }
    word
}
