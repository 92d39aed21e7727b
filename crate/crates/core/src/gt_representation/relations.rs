//! Numerical checks tying the Gauss components of `L(v)` to the closed-form
//! half-currents, plus the exchange relations among the closed forms and the
//! `[E, F]` relation of the currents.

use num_complex::Complex64;
use serde::Serialize;

use super::basis::gt_frame;
use super::currents::{
    cartan_eigenvalue, e_current, f_current, half_current_matrix, k_eigenvalue, CurrentNormalization, Expansion,
    HalfCurrent,
};
use super::loperator::{gauss_at, l_operator};
use super::{check_module_size, word_index};
use crate::combinatorics::{enumerate_words, PartitionIndex};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::{b, b_bar, c, c_bar, DynamicalState};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Serialize)]
pub struct RelationResidual {
    pub name: String,
    pub residual: f64,
}

impl RelationResidual {
    fn new(name: impl Into<String>, residual: f64) -> Self {
        RelationResidual { name: name.into(), residual }
    }
}

fn diag(values: Vec<Complex64>) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values))
}

/// Gauss components against the closed forms, with the matrix `Ξ(P)` of GT
/// vectors over all words:
/// `K_j(P) Ξ(P+ε_j) = Ξ(P) κ_j`, `E_{j+1,j}(P) Ξ(P+ε_j) = Ξ(P+ε_{j+1}) 𝓔_j(P)`,
/// `F_{j,j+1}(P) Ξ(P) = Ξ(P) 𝓕_j(P)`.
pub fn half_current_oracle(
    v: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    expansion: Expansion,
) -> Result<Vec<RelationResidual>> {
    let rank = state.rank();
    let g = gauss_at(expansion.spectral(v, params), z, state, params)?;
    let frame = |s: &DynamicalState| -> Result<CMatrix> { Ok(gt_frame(z, s, params)?.vectors) };
    let xi = frame(state)?;
    let tag = expansion.name();
    let mut out = Vec::new();
    for j in 1..=rank {
        let shifted = frame(&state.shifted(j, 1))?;
        let closed = half_current_matrix(HalfCurrent::K(j), expansion, v, z, state, params)?;
        out.push(RelationResidual::new(format!("K{tag}_{j}"), linalg::residual(&(g.k(j) * &shifted), &(&xi * closed))));
    }
    for j in 1..rank {
        let lhs = g.e(j + 1, j) * frame(&state.shifted(j, 1))?;
        let closed = half_current_matrix(HalfCurrent::E(j), expansion, v, z, state, params)?;
        let rhs = frame(&state.shifted(j + 1, 1))? * closed;
        out.push(RelationResidual::new(format!("E{tag}_{{{},{j}}}", j + 1), linalg::residual(&lhs, &rhs)));
        let closed = half_current_matrix(HalfCurrent::F(j), expansion, v, z, state, params)?;
        let res = linalg::residual(&(g.f(j, j + 1) * &xi), &(&xi * closed));
        out.push(RelationResidual::new(format!("F{tag}_{{{j},{}}}", j + 1), res));
    }
    Ok(out)
}

/// Result of replaying the three-colour, five-site example on `ξ_{32211}`.
#[derive(Debug, Clone, Serialize)]
pub struct WorkedExample {
    pub items: Vec<RelationResidual>,
    /// Residual of the printed `c(u_1 − v, P_{2,3})/b̄(u_1 − v)` for the `E_{3,2}` coefficient.
    pub printed_e_coefficient_residual: f64,
}

impl WorkedExample {
    pub fn max_residual(&self) -> f64 {
        self.items.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn unit(rank: usize, word: &str) -> (usize, PartitionIndex) {
    let part = PartitionIndex::parse(rank, word).expect("valid word");
    (word_index(rank, part.word()), part)
}

fn vector_residual(got: &[Complex64], want: &[Complex64]) -> f64 {
    let scale = got.iter().fold(1.0f64, |a, x| a.max(x.norm()));
    got.iter().zip(want).fold(0.0f64, |a, (x, y)| a.max((x - y).norm())) / scale
}

fn column(m: &CMatrix, k: usize) -> Vec<Complex64> {
    m.column(k).iter().copied().collect()
}

/// `N = 3`, `n = 5`, `λ = (2,2,1)`: the L-operator entries and the half-currents
/// `K_3`, `E_{3,2}`, `F_{2,3}`, `K_2` acting on the top vector `ξ_{32211}`.
pub fn worked_example(v: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<WorkedExample> {
    if state.rank() != 3 || z.len() != 5 {
        return Err(Error::domain("the worked example needs rank 3 and five sites"));
    }
    let rank: usize = 3;
    let d = rank.pow(5);
    let l = l_operator(v, z, state, params)?;
    let g = gauss_at(v, z, state, params)?;
    let p23 = state.pair(2, 3);
    let bb = |a: usize| b_bar(params, z[a - 1] - v);
    let (top, _) = unit(rank, "32211");
    let (e_target, _) = unit(rank, "22211");
    let (f_top, _) = unit(rank, "33211");
    let (f_other, f_other_part) = unit(rank, "32311");
    let (k_a, _) = unit(rank, "23211");
    let (k_b, _) = unit(rank, "22311");
    let xi_32311 = {
        let basis = super::basis::gt_vectors(vec![f_other_part], z, state, params, super::basis::DescentPath::Leftmost)?;
        column(&basis.vectors, 0)
    };
    let e = |k: usize| {
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        out[k] = ONE;
        out
    };
    let axpy = |acc: &mut Vec<Complex64>, a: Complex64, x: &[Complex64]| {
        for (y, xi) in acc.iter_mut().zip(x) {
            *y += a * xi;
        }
    };
    let u = |a: usize| z[a - 1];
    let mut items = Vec::new();

    let k3 = bb(2)? * bb(3)? * bb(4)? * bb(5)?;
    items.push(RelationResidual::new("L33 on 32211", vector_residual(&column(l.block(3, 3), top), &scaled(&e(top), k3))));
    let l32 = c_bar(params, u(1) - v, p23)? * k3;
    items.push(RelationResidual::new("L32 on 32211", vector_residual(&column(l.block(3, 2), top), &scaled(&e(e_target), l32))));
    let k3_low = bb(1)? * k3;
    items.push(RelationResidual::new(
        "L33 on 22211",
        vector_residual(&column(l.block(3, 3), e_target), &scaled(&e(e_target), k3_low)),
    ));

    let tail = bb(4)? * bb(5)?;
    let mut l23 = scaled(&e(f_top), c(params, u(2) - v, p23 - 1.0)? * tail);
    axpy(&mut l23, bb(2)? * c(params, u(3) - v, p23)? * tail, &e(f_other));
    items.push(RelationResidual::new("L23 on 32211, standard basis", vector_residual(&column(l.block(2, 3), top), &l23)));
    let u23 = u(2) - u(3);
    let mut l23_gt = scaled(&e(f_top), c(params, u(2) - v, p23)? / b_bar(params, -u23)? * bb(3)? * tail);
    axpy(&mut l23_gt, bb(2)? * c(params, u(3) - v, p23)? / b_bar(params, u23)? * tail, &xi_32311);
    items.push(RelationResidual::new("L23 on 32211, GT basis", vector_residual(&column(l.block(2, 3), top), &l23_gt)));

    let c1 = c_bar(params, u(1) - v, p23)?;
    let mut l22 = scaled(&e(top), b(params, u(1) - v, p23)? * tail);
    axpy(&mut l22, c1 * c(params, u(2) - v, p23 + 1.0)? * tail, &e(k_a));
    axpy(&mut l22, c1 * bb(2)? * c(params, u(3) - v, p23 + 2.0)? * tail, &e(k_b));
    items.push(RelationResidual::new("L22 on 32211", vector_residual(&column(l.block(2, 2), top), &l22)));

    items.push(RelationResidual::new("K3 on 32211", vector_residual(&column(g.k(3), top), &scaled(&e(top), k3))));
    let e_coef = c1 / bb(1)?;
    let e_got = column(g.e(3, 2), top);
    items.push(RelationResidual::new("E32 on 32211", vector_residual(&e_got, &scaled(&e(e_target), e_coef))));
    let printed = c(params, u(1) - v, p23)? / bb(1)?;
    let printed_e_coefficient_residual = vector_residual(&e_got, &scaled(&e(e_target), printed));

    let mut f_want = scaled(&e(f_top), c(params, u(2) - v, p23)? / bb(2)? / b_bar(params, -u23)?);
    axpy(&mut f_want, c(params, u(3) - v, p23)? / bb(3)? / b_bar(params, u23)?, &xi_32311);
    items.push(RelationResidual::new("F23 on 32211", vector_residual(&column(g.f(2, 3), top), &f_want)));

    let mut fke = scaled(&e(top), c(params, u(1) - v, p23)? * c1 / bb(1)? * tail);
    axpy(&mut fke, c1 * c(params, u(2) - v, p23 + 1.0)? * tail, &e(k_a));
    axpy(&mut fke, c1 * bb(2)? * c(params, u(3) - v, p23 + 2.0)? * tail, &e(k_b));
    let fke_got = column(&(g.f(2, 3) * g.k(3) * g.e(3, 2)), top);
    items.push(RelationResidual::new("F23 K3 E32 on 32211", vector_residual(&fke_got, &fke)));

    let k2 = tail / b_bar(params, v - u(1))?;
    items.push(RelationResidual::new("K2 on 32211", vector_residual(&column(g.k(2), top), &scaled(&e(top), k2))));
    Ok(WorkedExample { items, printed_e_coefficient_residual })
}

fn scaled(x: &[Complex64], a: Complex64) -> Vec<Complex64> {
    x.iter().map(|y| a * y).collect()
}

/// Closed-form operators in GT coordinates, the building blocks of the
/// exchange relations.
struct ClosedForms<'a> {
    z: &'a [Complex64],
    state: &'a DynamicalState,
    params: &'a EllipticParams,
    words: Vec<PartitionIndex>,
}

impl ClosedForms<'_> {
    fn k(&self, j: usize, v: Complex64) -> Result<CMatrix> {
        half_current_matrix(HalfCurrent::K(j), Expansion::Plus, v, self.z, self.state, self.params)
    }

    fn k_inv(&self, j: usize, v: Complex64) -> Result<CMatrix> {
        let values = self
            .words
            .iter()
            .map(|w| Ok(ONE / self.params.guard(k_eigenvalue(w, j, v, self.z, self.params)?, v, "K eigenvalue")?))
            .collect::<Result<Vec<_>>>()?;
        Ok(diag(values))
    }

    fn e(&self, j: usize, v: Complex64, state: &DynamicalState) -> Result<CMatrix> {
        half_current_matrix(HalfCurrent::E(j), Expansion::Plus, v, self.z, state, self.params)
    }

    fn f(&self, j: usize, v: Complex64, state: &DynamicalState) -> Result<CMatrix> {
        half_current_matrix(HalfCurrent::F(j), Expansion::Plus, v, self.z, state, self.params)
    }

    /// `diag_I c̄(x, P_{j,j+1} + λ_j − λ_{j+1} + offset)`.
    fn c_bar_weighted(&self, j: usize, x: Complex64, offset: f64) -> Result<CMatrix> {
        let pj = self.state.pair(j, j + 1);
        let values = self
            .words
            .iter()
            .map(|w| {
                let wt = w.weight();
                c_bar(self.params, x, pj + (wt[j - 1] - wt[j]) as f64 + offset)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(diag(values))
    }
}

/// The five exchange relations among the closed-form `K`, `E`, `F`:
/// `K E K^{-1}`, `K F K^{-1}`, `E E`, `F F` and `[E, F]`.
pub fn exchange_relations(
    v1: Complex64,
    v2: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Vec<RelationResidual>> {
    let rank = state.rank();
    check_module_size(rank, z.len())?;
    let cf = ClosedForms { z, state, params, words: enumerate_words(rank, z.len())? };
    let v12 = v1 - v2;
    let bm = b_bar(params, -v12)?;
    let bp = b_bar(params, v12)?;
    let mut out = Vec::new();
    for j in 1..rank {
        let pj = state.pair(j, j + 1);
        let up = state.shifted(j + 1, 1);
        let uj = state.shifted(j, 1);

        let lhs = cf.k_inv(j + 1, v1)? * cf.e(j, v2, state)? * cf.k(j + 1, v1)?;
        let rhs = cf.e(j, v2, &up)? / bm - cf.e(j, v1, &up)? * (c(params, -v12, pj)? / bm);
        out.push(RelationResidual::new(format!("K E K^-1, j={j}"), linalg::residual(&lhs, &rhs)));

        let lhs = cf.k(j + 1, v1)? * cf.f(j, v2, &up)? * cf.k_inv(j + 1, v1)?;
        let rhs = cf.f(j, v2, state)? / bm - cf.c_bar_weighted(j, -v12, 0.0)? * cf.f(j, v1, state)? / bm;
        out.push(RelationResidual::new(format!("K F K^-1, j={j}"), linalg::residual(&lhs, &rhs)));

        let ea = |v| cf.e(j, v, &up);
        let eb = |v| cf.e(j, v, &uj);
        let lhs = ea(v1)? * eb(v2)? / bp - ea(v2)? * eb(v2)? * (c(params, v12, pj)? / bp);
        let rhs = ea(v2)? * eb(v1)? / bm - ea(v1)? * eb(v1)? * (c(params, -v12, pj)? / bm);
        out.push(RelationResidual::new(format!("E E, j={j}"), linalg::residual(&lhs, &rhs)));

        let (f1, f2) = (cf.f(j, v1, state)?, cf.f(j, v2, state)?);
        let lhs = &f1 * &f2 / bm - &f1 * &f1 * cf.c_bar_weighted(j, -v12, -2.0)? / bm;
        let rhs = &f2 * &f1 / bp - &f2 * &f2 * cf.c_bar_weighted(j, v12, -2.0)? / bp;
        out.push(RelationResidual::new(format!("F F, j={j}"), linalg::residual(&lhs, &rhs)));

        let lhs = cf.e(j, v1, state)? * cf.f(j, v2, &uj)? - cf.f(j, v2, &up)? * cf.e(j, v1, state)?;
        let rhs = cf.k(j, v2)? * cf.k_inv(j + 1, v2)? * (c_bar(params, -v12, pj)? / bm)
            - cf.k_inv(j + 1, v1)? * cf.k(j, v1)? * cf.c_bar_weighted(j, -v12, 0.0)? / bm;
        out.push(RelationResidual::new(format!("E F - F E, j={j}"), linalg::residual(&lhs, &rhs)));
    }
    Ok(out)
}

/// `(1/2πi) ∮ f` over a circle, by the trapezoidal rule.
pub fn residue_by_contour(f: impl Fn(Complex64) -> Result<Complex64>, center: Complex64, radius: f64, points: usize) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let step = Complex64::from_polar(radius, theta);
        acc += f(center + step)? * step;
    }
    Ok(acc / points as f64)
}

pub const CONTOUR_RADIUS: f64 = 1e-2;
pub const CONTOUR_POINTS: usize = 64;

/// The coefficient `∏_{k≤m} [u_a−u_k+1] ∏_{l>m} [u_a−u_l−1] / ∏_{j≠a} [u_a−u_j]`.
fn partial_fraction_weight(u: &[Complex64], m: usize, a: usize, params: &EllipticParams) -> Result<Complex64> {
    let mut out = ONE;
    for (k, &uk) in u.iter().enumerate() {
        let shift = if k < m { 1.0 } else { -1.0 };
        out *= params.bracket(u[a] - uk + shift);
        if k != a {
            out /= params.denominator(u[a] - uk, "[u_a - u_j]")?;
        }
    }
    Ok(out)
}

fn split_product(u: &[Complex64], m: usize, v: Complex64, params: &EllipticParams) -> Result<Complex64> {
    let mut out = ONE;
    for (k, &uk) in u.iter().enumerate() {
        let shift = if k < m { 1.0 } else { -1.0 };
        out *= params.bracket(v - uk + shift) / params.denominator(v - uk, "[v - u_k]")?;
    }
    Ok(out)
}

/// Partial-fraction identity for
/// `∏_{k≤m} [v−u_k+1]/[v−u_k] ∏_{l>m} [v−u_l−1]/[v−u_l]`, valid for `2m ≠ n`.
pub fn partial_fraction_residual(u: &[Complex64], m: usize, v: Complex64, params: &EllipticParams) -> Result<f64> {
    let n = u.len();
    if 2 * m == n || m > n {
        return Err(Error::domain(format!("need 2m != n and m <= n, got m = {m}, n = {n}")));
    }
    let shift = 2.0 * m as f64 - n as f64;
    let den = params.denominator(Complex64::new(shift, 0.0), "[2m - n]")?;
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 0..n {
        sum += params.bracket(v - u[a] + shift) / (den * params.denominator(v - u[a], "[v - u_a]")?)
            * partial_fraction_weight(u, m, a, params)?;
    }
    Ok(linalg::scalar_residual(split_product(u, m, v, params)?, sum))
}

/// The same product's residue at `v = u_a`, by contour against `(1/[0]')·weight`.
pub fn partial_fraction_residue_residual(u: &[Complex64], m: usize, a: usize, params: &EllipticParams) -> Result<f64> {
    let contour = residue_by_contour(|v| split_product(u, m, v, params), u[a], CONTOUR_RADIUS, CONTOUR_POINTS)?;
    let closed = partial_fraction_weight(u, m, a, params)? / params.bracket_deriv_zero();
    Ok(linalg::scalar_residual(closed, contour))
}

/// `[E_i^{(b)}, F_j^{(a)}]` over all site pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorReport {
    pub i: usize,
    pub j: usize,
    /// Largest `‖[E^{(b)}, F^{(a)}]‖` over pairs expected to vanish.
    pub vanishing: f64,
    /// For `i = j`, the largest residual of the diagonal pairs against
    /// `−([0]' C/[1]) Res_{v=u_c} h_j(v)`.
    pub diagonal: f64,
}

pub fn ef_commutators(i: usize, j: usize, z: &[Complex64], rank: usize, params: &EllipticParams) -> Result<CommutatorReport> {
    let norm = CurrentNormalization::standard(params)?;
    let e = e_current(i, z, rank, &norm, params)?;
    let f = f_current(j, z, rank, &norm, params)?;
    let words = enumerate_words(rank, z.len())?;
    let scale = -params.bracket_deriv_zero() * norm.ef_constant(params) / params.bracket(ONE);
    let mut vanishing = 0.0f64;
    let mut diagonal = 0.0f64;
    for ((bsite, asite), m) in e.commutators(&f) {
        if i != j || asite != bsite {
            vanishing = vanishing.max(linalg::max_abs(&m));
            continue;
        }
        let center = z[asite - 1];
        let expected = words
            .iter()
            .map(|w| {
                let res = residue_by_contour(|v| cartan_eigenvalue(w, j, v, z, params), center, CONTOUR_RADIUS, CONTOUR_POINTS)?;
                Ok(scale * res)
            })
            .collect::<Result<Vec<_>>>()?;
        diagonal = diagonal.max(linalg::residual(&m, &diag(expected)));
    }
    Ok(CommutatorReport { i, j, vanishing, diagonal })
}

/// Highest-weight data of `ξ_{1…1}`: `E` annihilates it and the Cartan
/// operators act by `h_1 = ∏_a [u_a−v+1]/[u_a−v]`, `h_l = 1` for `l ≥ 2`.
#[derive(Debug, Clone, Serialize)]
pub struct HighestWeightReport {
    pub closed_form_e: f64,
    pub gauss_e: f64,
    pub cartan: f64,
    /// `ϱ ∏_a [u_a−v+1]/[u_a−v]`.
    pub h1: Complex64,
}

pub fn highest_weight(v: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<HighestWeightReport> {
    let rank = state.rank();
    let n = z.len();
    let lowest = PartitionIndex::from_word(rank, &vec![1u8; n])?;
    let idx = lowest.basis_index();
    let mut closed_form_e = 0.0f64;
    let mut gauss_e = 0.0f64;
    let mut cartan = 0.0f64;
    let g = gauss_at(v, z, state, params)?;
    for j in 1..rank {
        let closed = half_current_matrix(HalfCurrent::E(j), Expansion::Plus, v, z, state, params)?;
        closed_form_e = closed_form_e.max(closed.column(idx).iter().fold(0.0, |a, x| a.max(x.norm())));
        gauss_e = gauss_e.max(g.e(j + 1, j).column(idx).iter().fold(0.0, |a, x| a.max(x.norm())));
        let shifted = state.shifted(j, 1).shifted(j + 1, -1);
        let k_next = gauss_at(v, z, &shifted, params)?;
        let inv = linalg::inverse_guarded(k_next.k(j + 1), super::loperator::DEFAULT_PIVOT_COND, j + 1)?;
        let op = g.k(j) * inv;
        let mut want = vec![Complex64::new(0.0, 0.0); op.nrows()];
        want[idx] = cartan_eigenvalue(&lowest, j, v, z, params)?;
        if j >= 2 && (want[idx] - ONE).norm() > 1e-14 {
            return Err(Error::domain("Cartan eigenvalue on the lowest word should be 1 beyond the first colour"));
        }
        cartan = cartan.max(vector_residual(&column(&op, idx), &want));
    }
    let mut h1 = params.varrho()?;
    for &u in z {
        h1 *= params.bracket(u - v + 1.0) / params.denominator(u - v, "[u_a - v]")?;
    }
    Ok(HighestWeightReport { closed_form_e, gauss_e, cartan, h1 })
}
