//! Elliptic weight functions `Ũ_I`, `W_I`, `W̃_I`, `𝒲_I`, their
//! specializations at `t = z_I`, the transition / orthogonality /
//! quasi-periodicity checks, and the stable-envelope relabelings.
//!
//! All variables are additive: `t^{(l)}_a = q^{2v^{(l)}_a}`, `z_k = q^{2u_k}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{dynamical_shift_sum, enumerate_partitions, leq, Lambda, PartitionIndex};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::{pair_index, rbar_entries, DynamicalState};

/// Cap on the number of summands `∏_l λ^{(l)}!` of a symmetrization.
pub const DEFAULT_SYM_BUDGET: usize = 1_000_000;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The variables `v^{(l)}_a` (`l = 1..N−1`, `a = 1..λ^{(l)}`) and `u_1..u_n`,
/// with `v^{(N)}_a = u_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TVariables {
    levels: Vec<Vec<Complex64>>,
    z: Vec<Complex64>,
}

impl TVariables {
    pub fn new(levels: Vec<Vec<Complex64>>, z: Vec<Complex64>) -> Self {
        TVariables { levels, z }
    }

    /// `t = z_I`: `v^{(l)}_a = u_{i^{(l)}_a}`.
    pub fn specialize(part: &PartitionIndex, z: &[Complex64]) -> Result<Self> {
        if z.len() != part.n() {
            return Err(Error::domain(format!("{} spectral parameters for {} sites", z.len(), part.n())));
        }
        let levels = (1..part.rank()).map(|l| part.union(l).iter().map(|&s| z[s - 1]).collect()).collect();
        Ok(TVariables { levels, z: z.to_vec() })
    }

    pub fn rank(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    /// `v^{(l)}`, with `level(N) = z` and `level(0)` empty.
    pub fn level(&self, l: usize) -> &[Complex64] {
        match l {
            0 => &[],
            l if l == self.rank() => &self.z,
            l => &self.levels[l - 1],
        }
    }

    /// Adds `delta` to `v^{(l)}_a` (1-based).
    pub fn shifted(&self, l: usize, a: usize, delta: Complex64) -> Self {
        let mut out = self.clone();
        out.levels[l - 1][a - 1] += delta;
        out
    }

    /// Same `t`, with `z` replaced.
    pub fn with_z(&self, z: Vec<Complex64>) -> Self {
        TVariables { levels: self.levels.clone(), z }
    }

    fn check_shape(&self, lambda: &Lambda) -> Result<()> {
        let rank = lambda.rank();
        let ok = self.rank() == rank
            && self.z.len() == lambda.n()
            && (1..rank).all(|l| self.levels[l - 1].len() == lambda.partial(l));
        if !ok {
            return Err(Error::domain(format!("variable shapes do not match lambda = {lambda}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightVariant {
    /// `Ũ_I`, before symmetrization.
    UTerm,
    /// `W_I = H_λ W̃_I`.
    Entire,
    /// `W̃_I`.
    Tilde,
    /// `𝒲_I = W_I / E_λ`.
    Cal,
}

impl WeightVariant {
    pub fn name(self) -> &'static str {
        match self {
            WeightVariant::UTerm => "u-term",
            WeightVariant::Entire => "w-entire",
            WeightVariant::Tilde => "w-tilde",
            WeightVariant::Cal => "w-cal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightValue {
    pub value: Complex64,
    pub variant: WeightVariant,
    pub index: PartitionIndex,
}

/// `H_λ(t,z) = ∏_l ∏_{a,b} [v^{(l+1)}_b − v^{(l)}_a + 1]`.
pub fn h_lambda(t: &TVariables, params: &EllipticParams) -> Complex64 {
    let mut out = ONE;
    for l in 1..t.rank() {
        for &va in t.level(l) {
            for &vb in t.level(l + 1) {
                out *= params.bracket(vb - va + 1.0);
            }
        }
    }
    out
}

/// `E_λ(t) = ∏_l ∏_{a,b} [v^{(l)}_b − v^{(l)}_a + 1]`, including `a = b`.
pub fn e_lambda(t: &TVariables, params: &EllipticParams) -> Complex64 {
    let mut out = ONE;
    for l in 1..t.rank() {
        let v = t.level(l);
        for &va in v {
            for &vb in v {
                out *= params.bracket(vb - va + 1.0);
            }
        }
    }
    out
}

/// Factor tables for one `(I, t, Π)`: cross factors between levels `l` and
/// `l + 1` indexed by slot pair and variable pair, and the within-level factor.
struct Tables {
    cross: Vec<CrossTable>,
    within: Vec<Vec<Complex64>>,
    sizes: Vec<usize>,
}

struct CrossTable {
    /// Slot pairs `(a, b)` that carry a nontrivial factor.
    active: Vec<(usize, usize)>,
    /// `values[k][α·m + β]` for the `k`-th active pair, `m = λ^{(l+1)}`.
    values: Vec<Vec<Complex64>>,
}

fn build_tables(part: &PartitionIndex, t: &TVariables, state: &DynamicalState, params: &EllipticParams) -> Result<Tables> {
    let rank = part.rank();
    let one = params.bracket(ONE);
    let mut cross = Vec::with_capacity(rank - 1);
    let mut within = Vec::with_capacity(rank - 1);
    for l in 1..rank {
        let lower = part.union(l);
        let upper = part.union(l + 1);
        let (v, w) = (t.level(l), t.level(l + 1));
        let mut active = Vec::new();
        let mut values = Vec::new();
        for (a, &s) in lower.iter().enumerate() {
            for (b, &x) in upper.iter().enumerate() {
                if x < s {
                    continue;
                }
                let mut table = Vec::with_capacity(v.len() * w.len());
                if x == s {
                    let shift = state.pair(part.color(s), l + 1) - dynamical_shift_sum(part, s, l)? as f64;
                    let denom_shift = params.denominator(shift, "[(P+h)_{mu_s,l+1} - C]")?;
                    for &va in v {
                        for &wb in w {
                            let d = wb - va;
                            table.push(params.bracket(d + shift) * one / (params.denominator(d + 1.0, "[v' - v + 1]")? * denom_shift));
                        }
                    }
                } else {
                    for &va in v {
                        for &wb in w {
                            let d = wb - va;
                            table.push(params.bracket(d) / params.denominator(d + 1.0, "[v' - v + 1]")?);
                        }
                    }
                }
                active.push((a, b));
                values.push(table);
            }
        }
        cross.push(CrossTable { active, values });
        let m = v.len();
        let mut inner = vec![ONE; m * m];
        for alpha in 0..m {
            for beta in 0..m {
                if alpha != beta {
                    let d = v[alpha] - v[beta];
                    inner[alpha * m + beta] = params.bracket(d - 1.0) / params.denominator(d, "[v_a - v_b]")?;
                }
            }
        }
        within.push(inner);
    }
    let sizes = (1..=rank).map(|l| t.level(l).len()).collect();
    Ok(Tables { cross, within, sizes })
}

impl Tables {
    /// `Ũ` with level `l` variables permuted by `perms[l-1]` (`perms[N-1]` is the identity on `z`).
    fn cross_factor(&self, l: usize, sigma: &[usize], tau: &[usize]) -> Complex64 {
        let table = &self.cross[l - 1];
        let m = self.sizes[l];
        table
            .active
            .iter()
            .zip(&table.values)
            .fold(ONE, |acc, (&(a, b), values)| acc * values[sigma[a] * m + tau[b]])
    }

    fn within_factor(&self, l: usize, sigma: &[usize]) -> Complex64 {
        let m = self.sizes[l - 1];
        let inner = &self.within[l - 1];
        let mut out = ONE;
        for a in 0..sigma.len() {
            for b in (a + 1)..sigma.len() {
                out *= inner[sigma[a] * m + sigma[b]];
            }
        }
        out
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == used.len() {
            out.push(current.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                current.push(x);
                rec(current, used, out);
                current.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// `Ũ_I(t, z, Π)`.
pub fn u_term(part: &PartitionIndex, t: &TVariables, state: &DynamicalState, params: &EllipticParams) -> Result<Complex64> {
    t.check_shape(&part.lambda())?;
    let tables = build_tables(part, t, state, params)?;
    let rank = part.rank();
    let ids: Vec<Vec<usize>> = (1..=rank).map(|l| (0..tables.sizes[l - 1]).collect()).collect();
    let mut out = ONE;
    for l in 1..rank {
        out *= tables.cross_factor(l, &ids[l - 1], &ids[l]) * tables.within_factor(l, &ids[l - 1]);
    }
    Ok(out)
}

/// `W̃_I = Sym_{t^{(1)}} ⋯ Sym_{t^{(N−1)}} Ũ_I`, summed level by level: the
/// summand factorizes along the chain of adjacent levels.
fn tilde_sum(part: &PartitionIndex, t: &TVariables, state: &DynamicalState, params: &EllipticParams, budget: usize) -> Result<Complex64> {
    let lambda = part.lambda();
    t.check_shape(&lambda)?;
    let rank = part.rank();
    let summands = (1..rank).try_fold(1usize, |acc, l| acc.checked_mul(factorial(lambda.partial(l))));
    match summands {
        Some(count) if count <= budget => {}
        _ => return Err(Error::Resource(format!("symmetrization of {part} exceeds the budget of {budget} summands"))),
    }
    let tables = build_tables(part, t, state, params)?;
    let mut upper_perms: Vec<Vec<usize>> = vec![(0..lambda.n()).collect()];
    let mut upper_vals = vec![ONE];
    for l in (1..rank).rev() {
        let perms = permutations(lambda.partial(l));
        let row = |sigma: &Vec<usize>| {
            let inner = upper_perms
                .iter()
                .zip(&upper_vals)
                .fold(Complex64::new(0.0, 0.0), |acc, (tau, f)| acc + tables.cross_factor(l, sigma, tau) * f);
            tables.within_factor(l, sigma) * inner
        };
        let vals: Vec<Complex64> = if perms.len() * upper_perms.len() > 4096 {
            perms.par_iter().map(row).collect()
        } else {
            perms.iter().map(row).collect()
        };
        upper_perms = perms;
        upper_vals = vals;
    }
    Ok(upper_vals.iter().sum())
}

pub fn weight_w(
    part: &PartitionIndex,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
    variant: WeightVariant,
) -> Result<WeightValue> {
    weight_w_budgeted(part, t, state, params, variant, DEFAULT_SYM_BUDGET)
}

pub fn weight_w_budgeted(
    part: &PartitionIndex,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
    variant: WeightVariant,
    budget: usize,
) -> Result<WeightValue> {
    let value = match variant {
        WeightVariant::UTerm => u_term(part, t, state, params)?,
        WeightVariant::Tilde => tilde_sum(part, t, state, params, budget)?,
        WeightVariant::Entire => h_lambda(t, params) * tilde_sum(part, t, state, params, budget)?,
        WeightVariant::Cal => {
            let e = params.guard(e_lambda(t, params), Complex64::new(0.0, 0.0), "E_lambda(t)")?;
            h_lambda(t, params) * tilde_sum(part, t, state, params, budget)? / e
        }
    };
    Ok(WeightValue { value, variant, index: part.clone() })
}

fn weight(part: &PartitionIndex, t: &TVariables, state: &DynamicalState, params: &EllipticParams, variant: WeightVariant) -> Result<Complex64> {
    Ok(weight_w(part, t, state, params, variant)?.value)
}

/// The weight function of `j` at `t = z_I`.
pub fn specialize_zi(
    j: &PartitionIndex,
    i: &PartitionIndex,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    variant: WeightVariant,
) -> Result<WeightValue> {
    weight_w(j, &TVariables::specialize(i, z)?, state, params, variant)
}

/// `𝒲_I(z_I) = ∏_{k<l} ∏_{a∈I_k} (∏_{b∈I_l, a<b} [u_b − u_a] ∏_{b∈I_l, a>b} [u_b − u_a + 1])`.
pub fn diagonal_closed_form(part: &PartitionIndex, z: &[Complex64], params: &EllipticParams) -> Complex64 {
    let mut out = ONE;
    for k in 1..=part.rank() {
        for l in (k + 1)..=part.rank() {
            for &a in part.block(k) {
                for &b in part.block(l) {
                    let d = z[b - 1] - z[a - 1];
                    out *= if a < b { params.bracket(d) } else { params.bracket(d + 1.0) };
                }
            }
        }
    }
    out
}

/// Rows `I`, columns `J`: the weight function of `J` at `t = z_I`.
#[derive(Debug, Clone)]
pub struct SpecializationTable {
    pub parts: Vec<PartitionIndex>,
    pub variant: WeightVariant,
    pub values: CMatrix,
}

impl SpecializationTable {
    /// CSV with columns `I,J,variant,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("I,J,variant,re,im\n");
        for (r, i) in self.parts.iter().enumerate() {
            for (c, j) in self.parts.iter().enumerate() {
                let v = self.values[(r, c)];
                out.push_str(&format!("{i},{j},{},{:.17e},{:.17e}\n", self.variant.name(), v.re, v.im));
            }
        }
        out
    }
}

pub fn specialization_table(
    lambda: &Lambda,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    variant: WeightVariant,
) -> Result<SpecializationTable> {
    let parts = enumerate_partitions(lambda)?;
    let m = parts.len();
    let cells: Vec<Complex64> = (0..m * m)
        .into_par_iter()
        .map(|k| Ok(specialize_zi(&parts[k % m], &parts[k / m], z, state, params, variant)?.value))
        .collect::<Result<_>>()?;
    Ok(SpecializationTable { parts, variant, values: CMatrix::from_row_slice(m, m, &cells) })
}

/// Residual of the transition identity at site `i`:
/// `𝒲_{s_i I}(t, s_i z, Π) = Σ R̄(u_i − u_{i+1}, P − Σ_{j≥i} ε̄_{μ_j})[(μ_i,μ_{i+1}),(a,b)] 𝒲_{I[a,b]}(t, z, Π)`.
pub fn check_transition(part: &PartitionIndex, i: usize, t: &TVariables, state: &DynamicalState, params: &EllipticParams) -> Result<f64> {
    let n = part.n();
    if i == 0 || i >= n {
        return Err(Error::domain(format!("site {i} outside 1..{n}")));
    }
    let rank = part.rank();
    let z = t.z();
    let mut swapped_z = z.to_vec();
    swapped_z.swap(i - 1, i);
    let lhs = weight(&part.swapped(i), &t.with_z(swapped_z), state, params, WeightVariant::Cal)?;

    let mut tail = vec![0i64; rank];
    for s in i..=n {
        tail[part.color(s) - 1] += 1;
    }
    let r = rbar_entries(z[i - 1] - z[i], &state.with_scaled_weight(&tail, -1), params)?;
    let (mi, mj) = (part.color(i), part.color(i + 1));
    let row = pair_index(rank, mi, mj);
    let mut inputs = vec![(mi, mj)];
    if mi != mj {
        inputs.push((mj, mi));
    }
    let mut rhs = Complex64::new(0.0, 0.0);
    for (a, b) in inputs {
        let coef = r[(row, pair_index(rank, a, b))];
        let mut word = part.word().to_vec();
        word[i - 1] = a as u8;
        word[i] = b as u8;
        let other = PartitionIndex::from_word(rank, &word)?;
        rhs += coef * weight(&other, t, state, params, WeightVariant::Cal)?;
    }
    Ok(linalg::scalar_residual(lhs, rhs))
}

/// Which dynamical vector the first factor of the orthogonality sum uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrthogonalityShift {
    /// `−P + λ`, as printed.
    Verbatim,
    /// `−P`.
    Unshifted,
    /// `−P − λ`.
    Opposite,
}

/// `Q(z_I) R(z_I) = ∏_{k<l} ∏_{a∈I_k, b∈I_l} [u_b − u_a + 1][u_b − u_a]`.
fn q_r(part: &PartitionIndex, z: &[Complex64], params: &EllipticParams) -> Result<(Complex64, Complex64)> {
    let (mut q, mut r) = (ONE, ONE);
    for k in 1..=part.rank() {
        for l in (k + 1)..=part.rank() {
            for &a in part.block(k) {
                for &b in part.block(l) {
                    let d = z[b - 1] - z[a - 1];
                    q *= params.denominator(d + 1.0, "Q(z_I)")?;
                    r *= params.denominator(d, "R(z_I)")?;
                }
            }
        }
    }
    Ok((q, r))
}

fn reversed(part: &PartitionIndex) -> PartitionIndex {
    let mut word = part.word().to_vec();
    word.reverse();
    PartitionIndex::from_word(part.rank(), &word).expect("reversal keeps colours")
}

/// The grid `G[J,K] = Σ_I 𝒲_J(z_I, z, Π') 𝒲_{σ₀K}(z_I, σ₀z, Π) / (Q(z_I) R(z_I))`,
/// which should be the identity for the printed shift.
pub fn orthogonality_grid(
    lambda: &Lambda,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    shift: OrthogonalityShift,
) -> Result<(Vec<PartitionIndex>, CMatrix)> {
    let parts = enumerate_partitions(lambda)?;
    let first_state = match shift {
        OrthogonalityShift::Verbatim => state.inverse().with_weight(&lambda.weight()),
        OrthogonalityShift::Unshifted => state.inverse(),
        OrthogonalityShift::Opposite => state.inverse().with_scaled_weight(&lambda.weight(), -1),
    };
    let rev_z: Vec<Complex64> = z.iter().rev().copied().collect();
    let m = parts.len();
    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = parts
        .par_iter()
        .map(|i| {
            let t = TVariables::specialize(i, z)?;
            let (q, r) = q_r(i, z, params)?;
            let left = parts
                .iter()
                .map(|j| weight(j, &t, &first_state, params, WeightVariant::Cal))
                .collect::<Result<Vec<_>>>()?;
            let t_rev = t.with_z(rev_z.clone());
            let right = parts
                .iter()
                .map(|k| Ok(weight(&reversed(k), &t_rev, state, params, WeightVariant::Cal)? / (q * r)))
                .collect::<Result<Vec<_>>>()?;
            Ok((left, right))
        })
        .collect::<Result<_>>()?;
    let mut grid = CMatrix::zeros(m, m);
    for (left, right) in &columns {
        for a in 0..m {
            for b in 0..m {
                grid[(a, b)] += left[a] * right[b];
            }
        }
    }
    Ok((parts, grid))
}

/// `|Σ_I … − δ_{JK}|` for a single pair.
pub fn check_orthogonality(
    j: &PartitionIndex,
    k: &PartitionIndex,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<f64> {
    let lambda = j.lambda();
    if k.lambda() != lambda {
        return Err(Error::domain(format!("{j} and {k} have different shapes")));
    }
    let (parts, grid) = orthogonality_grid(&lambda, z, state, params, OrthogonalityShift::Verbatim)?;
    let a = parts.iter().position(|p| p == j).expect("enumerated");
    let b = parts.iter().position(|p| p == k).expect("enumerated");
    let delta = if a == b { ONE } else { Complex64::new(0.0, 0.0) };
    Ok((grid[(a, b)] - delta).norm())
}

/// Residuals for `v^{(l)}_a ↦ v^{(l)}_a + r` and `v^{(l)}_a ↦ v^{(l)}_a + rτ`.
pub fn check_quasiperiodicity(
    part: &PartitionIndex,
    l: usize,
    a: usize,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<(f64, f64)> {
    let rank = part.rank();
    if l == 0 || l >= rank || a == 0 || a > t.level(l).len() {
        return Err(Error::domain(format!("no variable v^({l})_{a}")));
    }
    let lambda = part.lambda();
    let diff = lambda.part(l + 1) as i64 - lambda.part(l) as i64;
    let base = weight(part, t, state, params, WeightVariant::Cal)?;

    let r = params.r();
    let sign = if (diff + 2) % 2 == 0 { 1.0 } else { -1.0 };
    let p_shifted = weight(part, &t.shifted(l, a, Complex64::new(r, 0.0)), state, params, WeightVariant::Cal)?;
    let first = linalg::scalar_residual(p_shifted, base * sign);

    let tau = params.tau();
    let sum = |k: usize| t.level(k).iter().sum::<Complex64>();
    let exponent = diff as f64 * t.level(l)[a - 1] - sum(l + 1) + 2.0 * sum(l) - sum(l - 1)
        - state.pair(l, l + 1)
        - lambda.part(l + 1) as f64;
    let i = Complex64::i();
    let multiplier = (-(-i * PI * tau).exp()).powi((diff + 2) as i32) * (-2.0 * PI * i / r * exponent).exp();
    let tau_shifted = weight(part, &t.shifted(l, a, r * tau), state, params, WeightVariant::Cal)?;
    let second = linalg::scalar_residual(tau_shifted, base * multiplier);
    Ok((first, second))
}

/// `Stab(F_I)(t) = 𝒲_{σ₀I}(t, σ₀(−u), −P)`; `t.z()` holds the original `u`.
pub fn stable_envelope(
    part: &PartitionIndex,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Complex64> {
    let z: Vec<Complex64> = t.z().iter().rev().map(|u| -u).collect();
    weight(&reversed(part), &t.with_z(z), &state.inverse(), params, WeightVariant::Cal)
}

/// `Stab(F_I)` restricted to the fixed point `J`: `t = z^{-1}_J`.
pub fn stab_restrict(
    i: &PartitionIndex,
    j: &PartitionIndex,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Complex64> {
    let neg: Vec<Complex64> = z.iter().map(|u| -u).collect();
    stable_envelope(i, &TVariables::specialize(j, &neg)?.with_z(z.to_vec()), state, params)
}

/// The fixed-point class `[I]` expanded in stable envelopes.
#[derive(Debug, Clone)]
pub struct FixedPointExpansion {
    pub parts: Vec<PartitionIndex>,
    /// `coefficients[(I, J)] = W̃_J(z^{-1}_I, z^{-1}, P + λ)`.
    pub coefficients: CMatrix,
    /// `restrictions[(K, I)] = Stab(F_K)|_I / R(z^{-1}_I)`.
    pub restrictions: CMatrix,
}

impl FixedPointExpansion {
    /// `max(‖C·S − 1‖, ‖S·C − 1‖)`.
    pub fn round_trip_residual(&self) -> f64 {
        let id = linalg::identity(self.parts.len());
        let forward = &self.coefficients * &self.restrictions;
        let backward = &self.restrictions * &self.coefficients;
        linalg::residual(&forward, &id).max(linalg::residual(&backward, &id))
    }

    pub fn coefficients_of(&self, part: &PartitionIndex) -> Option<Vec<(PartitionIndex, Complex64)>> {
        let row = self.parts.iter().position(|p| p == part)?;
        Some(self.parts.iter().enumerate().map(|(c, j)| (j.clone(), self.coefficients[(row, c)])).collect())
    }
}

pub fn fixed_point_expand(
    lambda: &Lambda,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<FixedPointExpansion> {
    let parts = enumerate_partitions(lambda)?;
    let m = parts.len();
    let neg: Vec<Complex64> = z.iter().map(|u| -u).collect();
    let shifted = state.with_weight(&lambda.weight());
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = parts
        .par_iter()
        .map(|i| {
            let t = TVariables::specialize(i, &neg)?;
            let (_, r) = q_r(i, &neg, params)?;
            let t_orig = t.with_z(z.to_vec());
            let coefficients =
                parts.iter().map(|j| weight(j, &t, &shifted, params, WeightVariant::Tilde)).collect::<Result<Vec<_>>>()?;
            let restrictions =
                parts.iter().map(|k| Ok(stable_envelope(k, &t_orig, state, params)? / r)).collect::<Result<Vec<_>>>()?;
            Ok((coefficients, restrictions))
        })
        .collect::<Result<_>>()?;
    let mut coefficients = CMatrix::zeros(m, m);
    let mut restrictions = CMatrix::zeros(m, m);
    for (row, (c, s)) in rows.iter().enumerate() {
        for col in 0..m {
            coefficients[(row, col)] = c[col];
            restrictions[(col, row)] = s[col];
        }
    }
    Ok(FixedPointExpansion { parts, coefficients, restrictions })
}

/// Triangularity of the specialization matrix: the weight function of `J` at
/// `z_I` vanishes unless `I ⩽ J`. Returns the largest entry that should vanish.
pub fn triangularity_defect(table: &SpecializationTable) -> Result<f64> {
    let mut worst = 0.0f64;
    for (r, i) in table.parts.iter().enumerate() {
        for (c, j) in table.parts.iter().enumerate() {
            if !leq(i, j)? {
                worst = worst.max(table.values[(r, c)].norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::enumerate_partitions;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(rank: usize) -> EllipticParams {
        EllipticParams::real(0.5, 3.0, rank).unwrap()
    }

    fn sample_z(n: usize) -> Vec<Complex64> {
        [c(0.31, 0.12), c(-0.27, 0.05), c(0.13, -0.21), c(-0.44, -0.09), c(0.52, 0.17)][..n].to_vec()
    }

    fn sample_state(rank: usize) -> DynamicalState {
        DynamicalState::new([c(0.37, 0.11), c(-0.19, 0.23), c(0.08, -0.14)][..rank].to_vec())
    }

    fn sample_t(lambda: &Lambda, z: &[Complex64]) -> TVariables {
        let pool = [c(0.21, 0.07), c(-0.33, 0.15), c(0.46, -0.12), c(-0.08, -0.26), c(0.15, 0.29)];
        let levels = (1..lambda.rank())
            .map(|l| (0..lambda.partial(l)).map(|a| pool[(a + 2 * l) % pool.len()] + 0.1 * l as f64).collect())
            .collect();
        TVariables::new(levels, z.to_vec())
    }

    /// Direct sum over every combination of within-level permutations.
    fn brute_tilde(part: &PartitionIndex, t: &TVariables, state: &DynamicalState, params: &EllipticParams) -> Complex64 {
        let rank = part.rank();
        let perm_sets: Vec<Vec<Vec<usize>>> = (1..rank).map(|l| permutations(t.level(l).len())).collect();
        let mut counters = vec![0usize; rank - 1];
        let mut total = Complex64::new(0.0, 0.0);
        loop {
            let levels = (1..rank)
                .map(|l| perm_sets[l - 1][counters[l - 1]].iter().map(|&k| t.level(l)[k]).collect())
                .collect();
            total += u_term(part, &TVariables::new(levels, t.z().to_vec()), state, params).unwrap();
            let mut k = 0;
            loop {
                if k == counters.len() {
                    return total;
                }
                counters[k] += 1;
                if counters[k] < perm_sets[k].len() {
                    break;
                }
                counters[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn empty_products_are_one() {
        let p = params(2);
        let t = TVariables::new(vec![vec![]], sample_z(2));
        assert_eq!(h_lambda(&t, &p), ONE);
        assert_eq!(e_lambda(&t, &p), ONE);
    }

    #[test]
    fn h_and_e_small_cases() {
        let p = params(2);
        let z = sample_z(2);
        let v = c(0.11, -0.04);
        let t = TVariables::new(vec![vec![v]], z.clone());
        let expected = p.bracket(z[0] - v + 1.0) * p.bracket(z[1] - v + 1.0);
        assert!((h_lambda(&t, &p) - expected).norm() < 1e-14);
        assert!((e_lambda(&t, &p) - p.bracket(ONE)).norm() < 1e-14);
    }

    #[test]
    fn single_site_u_term_is_the_diagonal_factor() {
        let p = params(2);
        let part = PartitionIndex::parse(2, "1").unwrap();
        let state = sample_state(2);
        let v = c(0.2, 0.1);
        let u = c(-0.1, 0.05);
        let t = TVariables::new(vec![vec![v]], vec![u]);
        let shift = state.pair(1, 2);
        let expected = p.bracket(u - v + shift) * p.bracket(ONE) / (p.bracket(u - v + 1.0) * p.bracket(shift));
        assert!((u_term(&part, &t, &state, &p).unwrap() - expected).norm() < 1e-13);
    }

    #[test]
    fn two_site_u_term_by_hand() {
        // I = ({1},{2}): i^{(1)} = (1), i^{(2)} = (1, 2); C_{1,2}(1) = 0 − 1 = −1.
        let p = params(2);
        let part = PartitionIndex::parse(2, "12").unwrap();
        let state = sample_state(2);
        let v = c(0.2, 0.1);
        let z = sample_z(2);
        let t = TVariables::new(vec![vec![v]], z.clone());
        let shift = state.pair(1, 2) + 1.0;
        let diag = p.bracket(z[0] - v + shift) * p.bracket(ONE) / (p.bracket(z[0] - v + 1.0) * p.bracket(shift));
        let upper = p.bracket(z[1] - v) / p.bracket(z[1] - v + 1.0);
        assert!((u_term(&part, &t, &state, &p).unwrap() - diag * upper).norm() < 1e-13);
    }

    #[test]
    fn chain_sum_matches_brute_symmetrization() {
        for (rank, parts) in [(2usize, vec![2usize, 1]), (3, vec![1, 1, 1]), (3, vec![2, 1, 1])] {
            let p = params(rank);
            let lambda = Lambda::new(parts).unwrap();
            let z = sample_z(lambda.n());
            let state = sample_state(rank);
            let t = sample_t(&lambda, &z);
            for part in enumerate_partitions(&lambda).unwrap() {
                let fast = weight(&part, &t, &state, &p, WeightVariant::Tilde).unwrap();
                let slow = brute_tilde(&part, &t, &state, &p);
                assert!(linalg::scalar_residual(fast, slow) < 1e-12, "{part}");
            }
        }
    }

    #[test]
    fn variants_are_consistent() {
        let p = params(3);
        let lambda = Lambda::new(vec![1, 2, 1]).unwrap();
        let z = sample_z(4);
        let state = sample_state(3);
        let t = sample_t(&lambda, &z);
        let part = PartitionIndex::parse(3, "2132").unwrap();
        let tilde = weight(&part, &t, &state, &p, WeightVariant::Tilde).unwrap();
        let entire = weight(&part, &t, &state, &p, WeightVariant::Entire).unwrap();
        let cal = weight(&part, &t, &state, &p, WeightVariant::Cal).unwrap();
        let h = h_lambda(&t, &p);
        assert!(linalg::scalar_residual(entire, h * tilde) < 1e-13);
        assert!(linalg::scalar_residual(cal, entire / e_lambda(&t, &p)) < 1e-13);
    }

    #[test]
    fn symmetric_in_each_level() {
        let p = params(3);
        let lambda = Lambda::new(vec![2, 1, 1]).unwrap();
        let z = sample_z(4);
        let state = sample_state(3);
        let t = sample_t(&lambda, &z);
        let part = PartitionIndex::parse(3, "3121").unwrap();
        let base = weight(&part, &t, &state, &p, WeightVariant::Tilde).unwrap();
        let mut levels: Vec<Vec<Complex64>> = (1..3).map(|l| t.level(l).to_vec()).collect();
        levels[0].swap(0, 1);
        levels[1].swap(0, 2);
        let permuted = weight(&part, &TVariables::new(levels, z), &state, &p, WeightVariant::Tilde).unwrap();
        assert!(linalg::scalar_residual(base, permuted) < 1e-12);
    }

    #[test]
    fn worked_example_specializations() {
        let p = params(2);
        let z = sample_z(3);
        let state = sample_state(2);
        let i211 = PartitionIndex::parse(2, "211").unwrap();
        let i121 = PartitionIndex::parse(2, "121").unwrap();
        let w = specialize_zi(&i211, &i211, &z, &state, &p, WeightVariant::Tilde).unwrap().value;
        assert!(linalg::scalar_residual(w, ONE) < 1e-12);
        let w = specialize_zi(&i121, &i121, &z, &state, &p, WeightVariant::Tilde).unwrap().value;
        let u21 = z[1] - z[0];
        assert!(linalg::scalar_residual(w, p.bracket(u21) / p.bracket(u21 + 1.0)) < 1e-12);
    }

    #[test]
    fn two_site_diagonal() {
        let p = params(2);
        let z = sample_z(2);
        let part = PartitionIndex::parse(2, "12").unwrap();
        let w = specialize_zi(&part, &part, &z, &sample_state(2), &p, WeightVariant::Cal).unwrap().value;
        assert!(linalg::scalar_residual(w, p.bracket(z[1] - z[0])) < 1e-12);
    }

    #[test]
    fn triangular_with_closed_form_diagonal() {
        for (rank, n) in [(2usize, 3usize), (3, 3), (3, 4)] {
            let p = params(rank);
            let z = sample_z(n);
            let state = sample_state(rank);
            for lambda in Lambda::all_with_size(rank, n) {
                let table = specialization_table(&lambda, &z, &state, &p, WeightVariant::Cal).unwrap();
                assert!(triangularity_defect(&table).unwrap() < 1e-12, "{lambda}");
                for (k, part) in table.parts.iter().enumerate() {
                    let expected = diagonal_closed_form(part, &z, &p);
                    assert!(linalg::scalar_residual(table.values[(k, k)], expected) < 1e-11, "{part}");
                }
            }
        }
    }

    #[test]
    fn transition_holds() {
        for (rank, parts) in [(2usize, vec![2usize, 1]), (3, vec![1, 1, 1]), (3, vec![2, 1, 1])] {
            let p = params(rank);
            let lambda = Lambda::new(parts).unwrap();
            let z = sample_z(lambda.n());
            let state = sample_state(rank);
            let t = sample_t(&lambda, &z);
            for part in enumerate_partitions(&lambda).unwrap() {
                for i in 1..lambda.n() {
                    assert!(check_transition(&part, i, &t, &state, &p).unwrap() < 1e-11, "{part} at {i}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_needs_the_printed_shift() {
        for (rank, parts) in [(2usize, vec![2usize, 1]), (2, vec![1, 2]), (3, vec![1, 1, 1]), (3, vec![2, 1, 1])] {
            let p = params(rank);
            let lambda = Lambda::new(parts).unwrap();
            let z = sample_z(lambda.n());
            let state = sample_state(rank);
            let id = linalg::identity(enumerate_partitions(&lambda).unwrap().len());
            let (_, grid) = orthogonality_grid(&lambda, &z, &state, &p, OrthogonalityShift::Verbatim).unwrap();
            assert!(linalg::residual(&grid, &id) < 1e-11, "{lambda}");
            // A uniform λ shifts every P_j equally and is invisible to the differences.
            if lambda.parts().iter().all(|&x| x == lambda.part(1)) {
                continue;
            }
            for shift in [OrthogonalityShift::Unshifted, OrthogonalityShift::Opposite] {
                let (_, grid) = orthogonality_grid(&lambda, &z, &state, &p, shift).unwrap();
                assert!(linalg::residual(&grid, &id) > 1e-3, "{lambda} {shift:?}");
            }
        }
    }

    #[test]
    fn quasiperiodic_multipliers() {
        for (rank, parts) in [(2usize, vec![1usize, 1]), (2, vec![2, 1]), (3, vec![2, 1, 1]), (3, vec![1, 1, 1])] {
            let p = params(rank);
            let lambda = Lambda::new(parts).unwrap();
            let z = sample_z(lambda.n());
            let state = sample_state(rank);
            let t = sample_t(&lambda, &z);
            for part in enumerate_partitions(&lambda).unwrap().iter().take(3) {
                for l in 1..rank {
                    for a in 1..=lambda.partial(l) {
                        let (first, second) = check_quasiperiodicity(part, l, a, &t, &state, &p).unwrap();
                        assert!(first < 1e-11 && second < 1e-11, "{part} l={l} a={a}: {first:e} {second:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn stable_envelope_restrictions() {
        let p = params(2);
        let z = sample_z(3);
        let state = sample_state(2);
        let neg: Vec<Complex64> = z.iter().map(|u| -u).collect();
        let rev_neg: Vec<Complex64> = neg.iter().rev().copied().collect();
        let lambda = Lambda::new(vec![2, 1]).unwrap();
        let parts = enumerate_partitions(&lambda).unwrap();
        for i in &parts {
            let diag = stab_restrict(i, i, &z, &state, &p).unwrap();
            let expected = diagonal_closed_form(&reversed(i), &rev_neg, &p);
            assert!(linalg::scalar_residual(diag, expected) < 1e-11, "{i}: {diag} vs {expected}");
            for j in &parts {
                if !leq(&reversed(j), &reversed(i)).unwrap() {
                    assert!(stab_restrict(i, j, &z, &state, &p).unwrap().norm() < 1e-12, "{i} at {j}");
                }
            }
        }
    }

    #[test]
    fn fixed_point_round_trip() {
        for (rank, parts) in [(2usize, vec![1usize, 1]), (2, vec![2, 1]), (2, vec![1, 2]), (3, vec![1, 1, 1])] {
            let p = params(rank);
            let lambda = Lambda::new(parts).unwrap();
            let z = sample_z(lambda.n());
            let expansion = fixed_point_expand(&lambda, &z, &sample_state(rank), &p).unwrap();
            assert!(expansion.round_trip_residual() < 1e-11, "{lambda}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = params(2);
        let lambda = Lambda::new(vec![3, 1]).unwrap();
        let z = sample_z(4);
        let part = PartitionIndex::minimal(&lambda);
        let t = sample_t(&lambda, &z);
        let err = weight_w_budgeted(&part, &t, &sample_state(2), &p, WeightVariant::Tilde, 5).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn shape_mismatch_is_a_domain_error() {
        let p = params(2);
        let part = PartitionIndex::parse(2, "12").unwrap();
        let t = TVariables::new(vec![vec![c(0.1, 0.0), c(0.2, 0.0)]], sample_z(2));
        assert!(matches!(u_term(&part, &t, &sample_state(2), &p), Err(Error::Domain(_))));
    }
}
