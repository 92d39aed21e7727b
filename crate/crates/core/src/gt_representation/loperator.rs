//! The L-operator of `V_{z_1} ⊗ ⋯ ⊗ V_{z_n}` and its Gauss decomposition into
//! half-currents `K_m`, `E_{m,j}`, `F_{j,m}`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use super::{check_module_size, decode_word, word_index};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::{pair_index, r_full, rbar_entries, DynamicalState, Sign};

/// Default bound on the 1-norm condition number of a Gauss pivot `K_m`.
pub const DEFAULT_PIVOT_COND: f64 = 1e10;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `L(v)` as an `N × N` array of operators on `V^{⊗n}`, indexed by
/// (auxiliary output, auxiliary input).
#[derive(Debug, Clone)]
pub struct LOperator {
    rank: usize,
    n: usize,
    v: Complex64,
    blocks: Vec<CMatrix>,
}

impl LOperator {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spectral(&self) -> Complex64 {
        self.v
    }

    pub fn dim(&self) -> usize {
        self.rank.pow(self.n as u32)
    }

    /// `L_{ij}`, 1-based.
    pub fn block(&self, i: usize, j: usize) -> &CMatrix {
        &self.blocks[(i - 1) * self.rank + (j - 1)]
    }

    /// The whole operator on `V_aux ⊗ V^{⊗n}`, auxiliary index outermost.
    pub fn assembled(&self) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(self.rank * d, self.rank * d);
        for i in 1..=self.rank {
            for j in 1..=self.rank {
                out.view_mut(((i - 1) * d, (j - 1) * d), (d, d)).copy_from(self.block(i, j));
            }
        }
        out
    }
}

/// Memoised `R̄(u_k − v, P + Σ_{j<k} ε̄_{μ_j})` keyed by site and weight of the
/// already-processed prefix.
struct SiteCache<'a> {
    params: &'a EllipticParams,
    state: &'a DynamicalState,
    map: HashMap<(usize, Vec<i64>), CMatrix>,
}

impl<'a> SiteCache<'a> {
    fn get(&mut self, site: usize, u: Complex64, prefix: Vec<i64>) -> Result<&CMatrix> {
        let key = (site, prefix);
        if !self.map.contains_key(&key) {
            let m = rbar_entries(u, &self.state.with_weight(&key.1), self.params)?;
            self.map.insert(key.clone(), m);
        }
        Ok(&self.map[&key])
    }
}

/// The monodromy `L(v) = R̄^{(0,1)}(u_1 − v, …) ⋯ R̄^{(0,n)}(u_n − v, …)`, with
/// the dynamical argument at site `k` shifted by the weight of the outgoing
/// colours on sites `1..k−1`.
pub fn l_operator(v: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<LOperator> {
    let rank = state.rank();
    let n = z.len();
    check_module_size(rank, n)?;
    let d = rank.pow(n as u32);
    let mut blocks = vec![CMatrix::zeros(d, d); rank * rank];
    let mut cache = SiteCache { params, state, map: HashMap::new() };
    for w in 0..d {
        let word = decode_word(rank, n, w);
        for j in 1..=rank {
            let mut paths: Vec<(usize, Vec<u8>, Complex64)> = vec![(j, word.clone(), ONE)];
            for k in 0..n {
                let mut next = Vec::with_capacity(paths.len() * 2);
                for (aux, sites, coef) in paths {
                    let mut prefix = vec![0i64; rank];
                    for &m in &sites[..k] {
                        prefix[m as usize - 1] += 1;
                    }
                    let r = cache.get(k, z[k] - v, prefix)?;
                    let input = pair_index(rank, aux, sites[k] as usize);
                    for oa in 1..=rank {
                        for os in 1..=rank {
                            let val = r[(pair_index(rank, oa, os), input)];
                            if val != Complex64::new(0.0, 0.0) {
                                let mut out = sites.clone();
                                out[k] = os as u8;
                                next.push((oa, out, coef * val));
                            }
                        }
                    }
                }
                paths = next;
            }
            for (aux, sites, coef) in paths {
                blocks[(aux - 1) * rank + (j - 1)][(word_index(rank, &sites), w)] += coef;
            }
        }
    }
    Ok(LOperator { rank, n, v, blocks })
}

/// Components of `L = F K E` with `F` upper and `E` lower unitriangular.
#[derive(Debug, Clone)]
pub struct GaussComponents {
    rank: usize,
    k: Vec<CMatrix>,
    e: BTreeMap<(usize, usize), CMatrix>,
    f: BTreeMap<(usize, usize), CMatrix>,
}

impl GaussComponents {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn k(&self, m: usize) -> &CMatrix {
        &self.k[m - 1]
    }

    /// `E_{m,j}` for `m > j`.
    pub fn e(&self, m: usize, j: usize) -> &CMatrix {
        &self.e[&(m, j)]
    }

    /// `F_{j,m}` for `j < m`.
    pub fn f(&self, j: usize, m: usize) -> &CMatrix {
        &self.f[&(j, m)]
    }

    /// `Σ_{k ≥ max(i,j)} F_{ik} K_k E_{kj}`.
    pub fn reassemble(&self, i: usize, j: usize) -> CMatrix {
        let d = self.k[0].nrows();
        let mut out = CMatrix::zeros(d, d);
        for kk in i.max(j)..=self.rank {
            let mut term = self.k(kk).clone();
            if kk > i {
                term = self.f(i, kk) * term;
            }
            if kk > j {
                term *= self.e(kk, j);
            }
            out += term;
        }
        out
    }
}

/// Recursive Schur-complement extraction, from `m = N` down to `1`.
pub fn gauss_extract(l: &LOperator, cond_limit: f64) -> Result<GaussComponents> {
    let rank = l.rank();
    let mut cur: BTreeMap<(usize, usize), CMatrix> = BTreeMap::new();
    for i in 1..=rank {
        for j in 1..=rank {
            cur.insert((i, j), l.block(i, j).clone());
        }
    }
    let mut k = vec![CMatrix::zeros(0, 0); rank];
    let mut e = BTreeMap::new();
    let mut f = BTreeMap::new();
    for m in (1..=rank).rev() {
        let km = cur[&(m, m)].clone();
        let ki = linalg::inverse_guarded(&km, cond_limit, m)?;
        for j in 1..m {
            e.insert((m, j), &ki * &cur[&(m, j)]);
            f.insert((j, m), &cur[&(j, m)] * &ki);
        }
        let mut next = BTreeMap::new();
        for i in 1..m {
            for j in 1..m {
                next.insert((i, j), &cur[&(i, j)] - &f[&(i, m)] * &cur[&(m, j)]);
            }
        }
        k[m - 1] = km;
        cur = next;
    }
    Ok(GaussComponents { rank, k, e, f })
}

/// Largest residual of `L_{ij} = Σ F K E` over all blocks.
pub fn reassembly_residual(l: &LOperator, g: &GaussComponents) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..=l.rank() {
        for j in 1..=l.rank() {
            worst = worst.max(linalg::residual(l.block(i, j), &g.reassemble(i, j)));
        }
    }
    worst
}

pub fn gauss_at(v: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<GaussComponents> {
    gauss_extract(&l_operator(v, z, state, params)?, DEFAULT_PIVOT_COND)
}

/// `M = K_1(v, P) K_2(v+1, P+ε̄_1) ⋯ K_N(v+N−1, P+ε̄_1+⋯+ε̄_{N−1})` together
/// with its distance from the scalar `∏_a [u_a − v − N + 1]/[u_a − v]`.
#[derive(Debug, Clone)]
pub struct CenterReport {
    pub scalar: Complex64,
    pub expected: Complex64,
    pub off_scalar: f64,
    pub scalar_mismatch: f64,
}

pub fn check_center(v: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<CenterReport> {
    let rank = state.rank();
    let d = rank.pow(z.len() as u32);
    let mut product = linalg::identity(d);
    let mut shifted = state.clone();
    for l in 1..=rank {
        let g = gauss_at(v + (l as f64 - 1.0), z, &shifted, params)?;
        product *= g.k(l);
        shifted = shifted.shifted(l, 1);
    }
    let (scalar, off_scalar) = linalg::is_scalar(&product);
    let mut expected = ONE;
    for &u in z {
        expected *= params.bracket(u - v - (rank as f64 - 1.0)) / params.denominator(u - v, "[u_a - v]")?;
    }
    Ok(CenterReport { scalar, expected, off_scalar, scalar_mismatch: linalg::scalar_residual(expected, scalar) })
}

/// Residual of `K_i(v_1, P) K_j(v_2, P+ε̄_i) = K_j(v_2, P) K_i(v_1, P+ε̄_j)`.
pub fn k_commutation_residual(
    i: usize,
    j: usize,
    v1: Complex64,
    v2: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<f64> {
    let lhs = gauss_at(v1, z, state, params)?.k(i) * gauss_at(v2, z, &state.shifted(i, 1), params)?.k(j);
    let rhs = gauss_at(v2, z, state, params)?.k(j) * gauss_at(v1, z, &state.shifted(j, 1), params)?.k(i);
    Ok(linalg::residual(&lhs, &rhs))
}

/// `L(v)` placed in auxiliary slot 1 or 2 of `V ⊗ V ⊗ V^{⊗n}`, with the dynamical
/// state chosen per colour of the other auxiliary slot.
fn embed_l(
    slot: usize,
    v: Complex64,
    z: &[Complex64],
    params: &EllipticParams,
    state_for_other: impl Fn(usize) -> DynamicalState,
) -> Result<CMatrix> {
    let rank = params.rank();
    let d = rank.pow(z.len() as u32);
    let big = rank * rank * d;
    let mut out = CMatrix::zeros(big, big);
    for other in 1..=rank {
        let l = l_operator(v, z, &state_for_other(other), params)?;
        for i in 1..=rank {
            for j in 1..=rank {
                let (row, col) = if slot == 1 {
                    (pair_index(rank, i, other) * d, pair_index(rank, j, other) * d)
                } else {
                    (pair_index(rank, other, i) * d, pair_index(rank, other, j) * d)
                };
                let mut view = out.view_mut((row, col), (d, d));
                view += l.block(i, j);
            }
        }
    }
    Ok(out)
}

/// `R̄(x, ·)` on the two auxiliary slots, its dynamical state read from the
/// module basis word.
fn embed_r(
    x: Complex64,
    n: usize,
    params: &EllipticParams,
    sign: Option<Sign>,
    state_for_word: impl Fn(&[u8]) -> DynamicalState,
) -> Result<CMatrix> {
    let rank = params.rank();
    let d = rank.pow(n as u32);
    let aux = rank * rank;
    let mut out = CMatrix::zeros(aux * d, aux * d);
    for m in 0..d {
        let st = state_for_word(&decode_word(rank, n, m));
        let r = match sign {
            None => rbar_entries(x, &st, params)?,
            Some(sign) => r_full(x, &st, params, sign)?.entries,
        };
        for a in 0..aux {
            for b in 0..aux {
                out[(a * d + m, b * d + m)] += r[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Residual of the dynamical RLL relation
/// `R̄(v_2 − v_1, P + h) L^{(1)}(v_1, P) L^{(2)}(v_2, P + h^{(1)}) = L^{(2)}(v_2, P) L^{(1)}(v_1, P + h^{(2)}) R̄(v_2 − v_1, P)`.
pub fn verify_rll(v1: Complex64, v2: Complex64, z: &[Complex64], state: &DynamicalState, params: &EllipticParams) -> Result<f64> {
    verify_rll_with(v1, v2, z, state, params, None)
}

/// As [`verify_rll`] with `R̄` replaced by `R^±`; `None` keeps `R̄`.
pub fn verify_rll_with(
    v1: Complex64,
    v2: Complex64,
    z: &[Complex64],
    state: &DynamicalState,
    params: &EllipticParams,
    sign: Option<Sign>,
) -> Result<f64> {
    let rank = state.rank();
    if params.rank() != rank {
        return Err(Error::domain("dynamical state and parameters disagree on the rank"));
    }
    let n = z.len();
    check_module_size(rank, n)?;
    let l1 = embed_l(1, v1, z, params, |_| state.clone())?;
    let l2_shifted = embed_l(2, v2, z, params, |o| state.shifted(o, 1))?;
    let l2 = embed_l(2, v2, z, params, |_| state.clone())?;
    let l1_shifted = embed_l(1, v1, z, params, |o| state.shifted(o, 1))?;
    let weighted = embed_r(v2 - v1, n, params, sign, |w| {
        let mut weight = vec![0i64; rank];
        for &m in w {
            weight[m as usize - 1] += 1;
        }
        state.with_weight(&weight)
    })?;
    let plain = embed_r(v2 - v1, n, params, sign, |_| state.clone())?;
    Ok(linalg::residual(&(weighted * l1 * l2_shifted), &(l2 * l1_shifted * plain)))
}
