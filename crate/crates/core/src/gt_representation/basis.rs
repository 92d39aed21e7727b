//! Gelfand-Tsetlin vectors `ξ_I` built from the exchange operators
//! `S̃_i = P^{(i,i+1)} R̄^{(i,i+1)}(u_i − u_{i+1}, P + Σ_{j<i} h^{(j)})`.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{check_module_size, decode_word, word_index};
use crate::combinatorics::{enumerate_partitions, enumerate_words, Lambda, PartitionIndex};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::{pair_index, rbar_entries, DynamicalState};
use crate::weight_functions::{weight_w, TVariables, WeightVariant};

/// `S̃_i(u)` as a dense operator on `V^{⊗n}`, `i` 1-based.
pub fn s_tilde(i: usize, u: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<CMatrix> {
    let rank = state.rank();
    let n = u.len();
    check_module_size(rank, n)?;
    if i == 0 || i >= n {
        return Err(Error::domain(format!("site {i} outside 1..{n}")));
    }
    let d = rank.pow(n as u32);
    let mut cache: HashMap<Vec<i64>, CMatrix> = HashMap::new();
    let mut out = CMatrix::zeros(d, d);
    for w in 0..d {
        let word = decode_word(rank, n, w);
        let mut prefix = vec![0i64; rank];
        for &m in &word[..i - 1] {
            prefix[m as usize - 1] += 1;
        }
        if !cache.contains_key(&prefix) {
            let r = rbar_entries(u[i - 1] - u[i], &state.with_weight(&prefix), params)?;
            cache.insert(prefix.clone(), r);
        }
        let r = &cache[&prefix];
        let input = pair_index(rank, word[i - 1] as usize, word[i] as usize);
        for a in 1..=rank {
            for b in 1..=rank {
                let val = r[(pair_index(rank, a, b), input)];
                if val != Complex64::new(0.0, 0.0) {
                    let mut o = word.clone();
                    o[i - 1] = b as u8;
                    o[i] = a as u8;
                    out[(word_index(rank, &o), w)] += val;
                }
            }
        }
    }
    Ok(out)
}

fn swap_spectral(u: &[Complex64], i: usize) -> Vec<Complex64> {
    let mut out = u.to_vec();
    out.swap(i - 1, i);
    out
}

/// Residual of `S̃_i(u) S̃_i(s_i u) = 1`.
pub fn s_tilde_square_residual(i: usize, u: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<f64> {
    let prod = s_tilde(i, u, state, params)? * s_tilde(i, &swap_spectral(u, i), state, params)?;
    Ok(linalg::residual(&prod, &linalg::identity(prod.nrows())))
}

/// Residual of the braid relation
/// `S̃_i(u) S̃_{i+1}(s_i u) S̃_i(s_{i+1} s_i u) = S̃_{i+1}(u) S̃_i(s_{i+1} u) S̃_{i+1}(s_i s_{i+1} u)`.
pub fn braid_residual(i: usize, u: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<f64> {
    let j = i + 1;
    let su = swap_spectral(u, i);
    let lhs = s_tilde(i, u, state, params)?
        * s_tilde(j, &su, state, params)?
        * s_tilde(i, &swap_spectral(&swap_spectral(u, i), j), state, params)?;
    let tu = swap_spectral(u, j);
    let rhs = s_tilde(j, u, state, params)?
        * s_tilde(i, &tu, state, params)?
        * s_tilde(j, &swap_spectral(&swap_spectral(u, j), i), state, params)?;
    Ok(linalg::residual(&lhs, &rhs))
}

/// Which ascent `μ_i < μ_{i+1}` the recursion peels off first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentPath {
    Leftmost,
    Rightmost,
}

/// `ξ_I` for `I` ranging over `parts`, in the standard basis.
#[derive(Debug, Clone)]
pub struct GtBasis {
    pub parts: Vec<PartitionIndex>,
    /// Column `k` is `ξ_{parts[k]}`.
    pub vectors: CMatrix,
}

impl GtBasis {
    pub fn column_of(&self, part: &PartitionIndex) -> Option<usize> {
        self.parts.iter().position(|p| p == part)
    }

    /// `X_{IJ} = ⟨v_J, ξ_I⟩`.
    pub fn transition_matrix(&self) -> CMatrix {
        let m = self.parts.len();
        CMatrix::from_fn(m, m, |r, c| self.vectors[(self.parts[c].basis_index(), r)])
    }
}

struct Builder<'a> {
    rank: usize,
    z: &'a [Complex64],
    state: &'a DynamicalState,
    params: &'a EllipticParams,
    path: DescentPath,
    operators: HashMap<(usize, Vec<usize>), CMatrix>,
    memo: HashMap<(Vec<u8>, Vec<usize>), Vec<Complex64>>,
}

impl Builder<'_> {
    /// `ξ_word` with spectral parameters `z[perm[0]], z[perm[1]], …`.
    fn xi(&mut self, word: &[u8], perm: &[usize]) -> Result<Vec<Complex64>> {
        let key = (word.to_vec(), perm.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let n = word.len();
        let ascents = (1..n).filter(|&i| word[i - 1] < word[i]);
        let ascent = match self.path {
            DescentPath::Leftmost => ascents.min(),
            DescentPath::Rightmost => ascents.max(),
        };
        let out = match ascent {
            None => {
                let mut e = vec![Complex64::new(0.0, 0.0); self.rank.pow(n as u32)];
                e[word_index(self.rank, word)] = Complex64::new(1.0, 0.0);
                e
            }
            Some(i) => {
                let mut swapped = word.to_vec();
                swapped.swap(i - 1, i);
                let mut perm2 = perm.to_vec();
                perm2.swap(i - 1, i);
                let inner = self.xi(&swapped, &perm2)?;
                let op_key = (i, perm.to_vec());
                if !self.operators.contains_key(&op_key) {
                    let u: Vec<Complex64> = perm.iter().map(|&k| self.z[k]).collect();
                    let op = s_tilde(i, &u, self.state, self.params)?;
                    self.operators.insert(op_key.clone(), op);
                }
                let op = &self.operators[&op_key];
                (0..op.nrows()).map(|r| (0..op.ncols()).map(|c| op[(r, c)] * inner[c]).sum()).collect()
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

pub fn gt_vectors(
    parts: Vec<PartitionIndex>,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    path: DescentPath,
) -> Result<GtBasis> {
    let rank = state.rank();
    let n = z.len();
    check_module_size(rank, n)?;
    let mut builder = Builder { rank, z, state, params, path, operators: HashMap::new(), memo: HashMap::new() };
    let identity: Vec<usize> = (0..n).collect();
    let d = rank.pow(n as u32);
    let mut vectors = CMatrix::zeros(d, parts.len());
    for (k, part) in parts.iter().enumerate() {
        if part.n() != n || part.rank() != rank {
            return Err(Error::domain(format!("{part} does not fit {n} sites of rank {rank}")));
        }
        let xi = builder.xi(part.word(), &identity)?;
        vectors.set_column(k, &nalgebra::DVector::from_vec(xi));
    }
    Ok(GtBasis { parts, vectors })
}

/// `ξ_I` for all `I ∈ 𝓘_λ`.
pub fn gt_basis(lambda: &Lambda, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<GtBasis> {
    gt_vectors(enumerate_partitions(lambda)?, z, state, params, DescentPath::Leftmost)
}

/// `ξ_I` for every word, columns in basis-index order.
pub fn gt_frame(z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<GtBasis> {
    let parts = enumerate_words(state.rank(), z.len())?;
    gt_vectors(parts, z, state, params, DescentPath::Leftmost)
}

/// `X_{IJ} = W̃_J(z_I^-, −z, P + λ)` with `z^- = −z`.
pub fn x_matrix_via_weights(lambda: &Lambda, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<CMatrix> {
    let parts = enumerate_partitions(lambda)?;
    let neg: Vec<Complex64> = z.iter().map(|x| -x).collect();
    let shifted = state.with_weight(&lambda.weight());
    let m = parts.len();
    let mut out = CMatrix::zeros(m, m);
    for (r, i) in parts.iter().enumerate() {
        let t = TVariables::specialize(i, &neg)?;
        for (c, j) in parts.iter().enumerate() {
            out[(r, c)] = weight_w(j, &t, &shifted, params, WeightVariant::Tilde)?.value;
        }
    }
    Ok(out)
}

/// Residual between `⟨v_J, ξ_I⟩` and the weight-function formula for `X`.
pub fn check_x_matrix(lambda: &Lambda, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<f64> {
    let basis = gt_basis(lambda, z, state, params)?;
    Ok(linalg::residual(&x_matrix_via_weights(lambda, z, state, params)?, &basis.transition_matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmatrix::{b_bar, c};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(rank: usize) -> (EllipticParams, DynamicalState) {
        let params = EllipticParams::real(0.5, 3.0, rank).unwrap();
        let p = (0..rank).map(|k| c64(0.27 * k as f64 - 0.35, 0.06 - 0.04 * k as f64)).collect();
        (params, DynamicalState::new(p))
    }

    #[test]
    fn exchange_operators_square_to_one_and_braid() {
        let (params, state) = setup(3);
        let u = [c64(0.11, 0.02), c64(-0.27, 0.06), c64(0.38, -0.04)];
        for i in 1..=2 {
            assert!(s_tilde_square_residual(i, &u, &state, &params).unwrap() < 1e-12);
        }
        assert!(braid_residual(1, &u, &state, &params).unwrap() < 1e-12);
    }

    #[test]
    fn both_descent_paths_agree() {
        let (params, state) = setup(3);
        let z = [c64(0.11, 0.02), c64(-0.27, 0.06), c64(0.38, -0.04), c64(0.05, 0.1)];
        let lambda = Lambda::new(vec![2, 1, 1]).unwrap();
        let parts = enumerate_partitions(&lambda).unwrap();
        let a = gt_vectors(parts.clone(), &z, &state, &params, DescentPath::Leftmost).unwrap();
        let b = gt_vectors(parts, &z, &state, &params, DescentPath::Rightmost).unwrap();
        assert!(linalg::residual(&a.vectors, &b.vectors) < 1e-12);
    }

    #[test]
    fn x_matrix_matches_weight_functions() {
        for parts in [vec![1, 2], vec![2, 1, 1], vec![1, 1, 1]] {
            let lambda = Lambda::new(parts).unwrap();
            let (params, state) = setup(lambda.rank());
            let z: Vec<_> = [c64(0.11, 0.02), c64(-0.27, 0.06), c64(0.38, -0.04), c64(0.05, 0.1)][..lambda.n()].to_vec();
            let res = check_x_matrix(&lambda, &z, &state, &params).unwrap();
            assert!(res < 1e-10, "{lambda:?}: {res}");
        }
    }

    #[test]
    fn two_colour_three_site_x_entries() {
        let (params, state) = setup(2);
        let u = [c64(0.11, 0.02), c64(-0.27, 0.06), c64(0.38, -0.04)];
        let lambda = Lambda::new(vec![2, 1]).unwrap();
        let basis = gt_basis(&lambda, &u, &state, &params).unwrap();
        let x = basis.transition_matrix();
        let order: Vec<String> = basis.parts.iter().map(|p| p.to_string()).collect();
        assert_eq!(order, ["112", "121", "211"]);
        let p12 = state.pair(1, 2);
        let bb = |x: Complex64| b_bar(&params, x).unwrap();
        let cc = |x: Complex64, s: Complex64| c(&params, x, s).unwrap();
        let (u12, u13, u23) = (u[0] - u[1], u[0] - u[2], u[1] - u[2]);
        // rows/columns here are 112, 121, 211
        let want = [
            [bb(u13) * bb(u23), bb(u13) * cc(u23, p12 + 1.0), cc(u13, p12)],
            [c64(0.0, 0.0), bb(u12), cc(u12, p12)],
            [c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        ];
        for r in 0..3 {
            for col in 0..3 {
                assert!((x[(r, col)] - want[r][col]).norm() < 1e-12, "({r},{col})");
            }
        }
    }
}
