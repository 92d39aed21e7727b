//! Closed-form action of the half-currents and of the elliptic currents on
//! Gelfand-Tsetlin vectors. Operators here are matrices in GT coordinates:
//! column `I` holds the expansion of the image of `ξ_I` in the `ξ_J`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::{check_module_size, ModuleVector};
use crate::combinatorics::{enumerate_words, move_down, move_up, PartitionIndex};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rmatrix::{b_bar, DynamicalState};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `K_j`, `E_{j+1,j}` or `F_{j,j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HalfCurrent {
    K(usize),
    E(usize),
    F(usize),
}

/// Which formal expansion of the half-current is meant. The two agree as
/// meromorphic functions; the `Minus` one is produced by `v ↦ v + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expansion {
    Plus,
    Minus,
}

impl Expansion {
    pub fn spectral(self, v: Complex64, params: &EllipticParams) -> Complex64 {
        match self {
            Expansion::Plus => v,
            Expansion::Minus => v + params.r(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Expansion::Plus => "+",
            Expansion::Minus => "-",
        }
    }
}

fn ratio(params: &EllipticParams, num: Complex64, den: Complex64, label: &str) -> Result<Complex64> {
    Ok(params.bracket(num) / params.denominator(den, label)?)
}

fn check_color(part: &PartitionIndex, j: usize, top: usize) -> Result<()> {
    if j == 0 || j > top {
        return Err(Error::domain(format!("colour index {j} outside 1..={top} for rank {}", part.rank())));
    }
    Ok(())
}

/// Eigenvalue of `K_j(v)` on `ξ_I`:
/// `∏_{k<j} ∏_{a∈I_k} b̄(u_a − v) · ∏_{l>j} ∏_{b∈I_l} [u_b − v − 1]/[u_b − v]`.
pub fn k_eigenvalue(part: &PartitionIndex, j: usize, v: Complex64, z: &[Complex64], params: &EllipticParams) -> Result<Complex64> {
    check_color(part, j, part.rank())?;
    let mut out = ONE;
    for k in 1..j {
        for &a in part.block(k) {
            out *= b_bar(params, z[a - 1] - v)?;
        }
    }
    for l in (j + 1)..=part.rank() {
        for &b in part.block(l) {
            out *= ratio(params, z[b - 1] - v - 1.0, z[b - 1] - v, "[u_b - v]")?;
        }
    }
    Ok(out)
}

/// `E_{j+1,j}(v) ξ_I = Σ_{i∈I_{j+1}} coef_i ξ_{I^{i'}}` where site `i` moves to colour `j`.
pub fn e_action(
    part: &PartitionIndex,
    j: usize,
    v: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Vec<(PartitionIndex, Complex64)>> {
    check_color(part, j, part.rank() - 1)?;
    let pj = state.pair(j, j + 1);
    let one = params.bracket(ONE);
    let upper = part.block(j + 1);
    let mut out = Vec::with_capacity(upper.len());
    for &i in upper {
        let ui = z[i - 1];
        let mut coef = params.bracket(pj - ui + v) * one
            / (params.denominator(pj, "[P_{j,j+1}]")? * params.denominator(ui - v, "[u_i - v]")?);
        for &k in upper {
            if k != i {
                coef *= ratio(params, ui - z[k - 1] + 1.0, ui - z[k - 1], "[u_i - u_k]")?;
            }
        }
        out.push((move_up(part, j, i)?, coef));
    }
    Ok(out)
}

/// `F_{j,j+1}(v) ξ_I = Σ_{i∈I_j} coef_i ξ_{I^{'i}}` where site `i` moves to colour
/// `j+1`; the dynamical argument is `P_{j,j+1} + λ_j − λ_{j+1}`.
pub fn f_action(
    part: &PartitionIndex,
    j: usize,
    v: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Vec<(PartitionIndex, Complex64)>> {
    check_color(part, j, part.rank() - 1)?;
    let lambda = part.lambda();
    let pj = state.pair(j, j + 1) + (lambda.part(j) as f64 - lambda.part(j + 1) as f64);
    let one = params.bracket(ONE);
    let lower = part.block(j);
    let mut out = Vec::with_capacity(lower.len());
    for &i in lower {
        let ui = z[i - 1];
        let mut coef = params.bracket(pj + ui - v - 1.0) * one
            / (params.denominator(pj - 1.0, "[P_{j,j+1} - 1]")? * params.denominator(ui - v, "[u_i - v]")?);
        for &k in lower {
            if k != i {
                coef *= ratio(params, z[k - 1] - ui + 1.0, z[k - 1] - ui, "[u_k - u_i]")?;
            }
        }
        out.push((move_down(part, j, i)?, coef));
    }
    Ok(out)
}

fn half_current_terms(
    kind: HalfCurrent,
    part: &PartitionIndex,
    v: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Vec<(PartitionIndex, Complex64)>> {
    match kind {
        HalfCurrent::K(j) => Ok(vec![(part.clone(), k_eigenvalue(part, j, v, z, params)?)]),
        HalfCurrent::E(j) => e_action(part, j, v, z, state, params),
        HalfCurrent::F(j) => f_action(part, j, v, z, state, params),
    }
}

/// The image of `ξ_I` under a half-current, in GT coordinates.
pub fn act_half_current(
    kind: HalfCurrent,
    expansion: Expansion,
    v: Complex64,
    part: &PartitionIndex,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<ModuleVector> {
    let rank = part.rank();
    check_module_size(rank, part.n())?;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); rank.pow(part.n() as u32)];
    let mut weight = part.weight();
    match kind {
        HalfCurrent::K(_) => {}
        HalfCurrent::E(j) => {
            weight[j - 1] += 1;
            weight[j] -= 1;
        }
        HalfCurrent::F(j) => {
            weight[j - 1] -= 1;
            weight[j] += 1;
        }
    }
    for (target, coef) in half_current_terms(kind, part, expansion.spectral(v, params), z, state, params)? {
        coefficients[target.basis_index()] += coef;
    }
    Ok(ModuleVector { coefficients, weight })
}

/// A half-current as a matrix in GT coordinates over all `N^n` words.
pub fn half_current_matrix(
    kind: HalfCurrent,
    expansion: Expansion,
    v: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<CMatrix> {
    let rank = state.rank();
    let words = enumerate_words(rank, z.len())?;
    let d = words.len();
    let mut out = CMatrix::zeros(d, d);
    let w = expansion.spectral(v, params);
    for (col, part) in words.iter().enumerate() {
        for (target, coef) in half_current_terms(kind, part, w, z, state, params)? {
            out[(target.basis_index(), col)] += coef;
        }
    }
    Ok(out)
}

/// `h_j(v) = ∏_{k∈I_j} [u_k − v + 1]/[u_k − v] · ∏_{l∈I_{j+1}} [u_l − v − 1]/[u_l − v]`,
/// the eigenvalue of `K_j(v) K_{j+1}(v)^{-1}` on `ξ_I` (with the dynamical shifts).
pub fn cartan_eigenvalue(part: &PartitionIndex, j: usize, v: Complex64, z: &[Complex64], params: &EllipticParams) -> Result<Complex64> {
    check_color(part, j, part.rank() - 1)?;
    let mut out = ONE;
    for &k in part.block(j) {
        out *= ratio(params, z[k - 1] - v + 1.0, z[k - 1] - v, "[u_k - v]")?;
    }
    for &l in part.block(j + 1) {
        out *= ratio(params, z[l - 1] - v - 1.0, z[l - 1] - v, "[u_l - v]")?;
    }
    Ok(out)
}

/// Constants `μ`, `μ*` fixing the normalisation of the currents.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurrentNormalization {
    pub mu: Complex64,
    pub mu_star: Complex64,
}

impl CurrentNormalization {
    /// `μ = 1`, `μ* = −ϱ[0]'/((q − q^{-1})[1])`.
    pub fn standard(params: &EllipticParams) -> Result<Self> {
        let q = params.q();
        let one = params.denominator(ONE, "[1]")?;
        let mu_star = -params.varrho()? * params.bracket_deriv_zero() / ((q - 1.0 / q) * one);
        Ok(CurrentNormalization { mu: ONE, mu_star })
    }

    /// `μ μ* ([1]/[0]')²`, the constant in the `[E, F]` relation.
    pub fn ef_constant(&self, params: &EllipticParams) -> Complex64 {
        let r = params.bracket(ONE) / params.bracket_deriv_zero();
        self.mu * self.mu_star * r * r
    }
}

/// A current `Σ_i A^{(i)} δ(u_i/v)`: one GT-coordinate matrix per site.
#[derive(Debug, Clone)]
pub struct DeltaOperator {
    pub supports: BTreeMap<usize, CMatrix>,
}

impl DeltaOperator {
    /// `A^{(b)} B^{(a)} − B^{(a)} A^{(b)}` for every pair of sites.
    pub fn commutators(&self, other: &DeltaOperator) -> BTreeMap<(usize, usize), CMatrix> {
        let mut out = BTreeMap::new();
        for (&b, x) in &self.supports {
            for (&a, y) in &other.supports {
                out.insert((b, a), x * y - y * x);
            }
        }
        out
    }
}

/// `E_j(v)`: for `i ∈ I_{j+1}`, `E_j^{(i)} ξ_I = μ*[1]/[0]' ∏_{k∈I_{j+1}, k≠i} [u_i−u_k+1]/[u_i−u_k] ξ_{I^{i'}}`.
pub fn e_current(j: usize, z: &[Complex64], rank: usize, norm: &CurrentNormalization, params: &EllipticParams) -> Result<DeltaOperator> {
    let scale = norm.mu_star * params.bracket(ONE) / params.bracket_deriv_zero();
    current(z, rank, |part, site| {
        if !part.block(j + 1).contains(&site) {
            return Ok(None);
        }
        let ui = z[site - 1];
        let mut coef = scale;
        for &k in part.block(j + 1) {
            if k != site {
                coef *= ratio(params, ui - z[k - 1] + 1.0, ui - z[k - 1], "[u_i - u_k]")?;
            }
        }
        Ok(Some((move_up(part, j, site)?, coef)))
    })
}

/// `F_j(v)`: for `i ∈ I_j`, `F_j^{(i)} ξ_I = μ[1]/[0]' ∏_{k∈I_j, k≠i} [u_k−u_i+1]/[u_k−u_i] ξ_{I^{'i}}`.
pub fn f_current(j: usize, z: &[Complex64], rank: usize, norm: &CurrentNormalization, params: &EllipticParams) -> Result<DeltaOperator> {
    let scale = norm.mu * params.bracket(ONE) / params.bracket_deriv_zero();
    current(z, rank, |part, site| {
        if !part.block(j).contains(&site) {
            return Ok(None);
        }
        let ui = z[site - 1];
        let mut coef = scale;
        for &k in part.block(j) {
            if k != site {
                coef *= ratio(params, z[k - 1] - ui + 1.0, z[k - 1] - ui, "[u_k - u_i]")?;
            }
        }
        Ok(Some((move_down(part, j, site)?, coef)))
    })
}

fn current(
    z: &[Complex64],
    rank: usize,
    entry: impl Fn(&PartitionIndex, usize) -> Result<Option<(PartitionIndex, Complex64)>>,
) -> Result<DeltaOperator> {
    let words = enumerate_words(rank, z.len())?;
    let d = words.len();
    let mut supports = BTreeMap::new();
    for site in 1..=z.len() {
        let mut m = CMatrix::zeros(d, d);
        for (col, part) in words.iter().enumerate() {
            if let Some((target, coef)) = entry(part, site)? {
                m[(target.basis_index(), col)] += coef;
            }
        }
        supports.insert(site, m);
    }
    Ok(DeltaOperator { supports })
}
