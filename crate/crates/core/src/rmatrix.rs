//! The elliptic dynamical R-matrix `R̄(u, P)` on `V ⊗ V`, its `ρ^±`-scaled
//! versions, and residual checks for the dynamical Yang-Baxter equation and
//! unitarity.
//!
//! Basis order: `v_μ ⊗ v_ν ↦ N(μ − 1) + (ν − 1)`, rows are outputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::elliptic_core::{EllipticParams, RhoMinusVariant};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Additive dynamical parameters `P_j` together with an integer weight offset;
/// every dynamical argument is read as `P_j + offset_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalState {
    p: Vec<Complex64>,
    offset: Vec<i64>,
}

impl DynamicalState {
    pub fn new(p: Vec<Complex64>) -> Self {
        let offset = vec![0; p.len()];
        DynamicalState { p, offset }
    }

    pub fn zero(rank: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); rank])
    }

    pub fn rank(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[Complex64] {
        &self.p
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    /// `P_j + offset_j`, 1-based.
    pub fn effective(&self, j: usize) -> Complex64 {
        self.p[j - 1] + self.offset[j - 1] as f64
    }

    /// `(P + h)_{j,k}`.
    pub fn pair(&self, j: usize, k: usize) -> Complex64 {
        self.effective(j) - self.effective(k)
    }

    /// Adds `by · ε̄_μ` to the offset.
    pub fn shifted(&self, mu: usize, by: i64) -> Self {
        let mut out = self.clone();
        out.offset[mu - 1] += by;
        out
    }

    /// Adds an integer weight vector to the offset.
    pub fn with_weight(&self, weight: &[i64]) -> Self {
        self.with_scaled_weight(weight, 1)
    }

    pub fn with_scaled_weight(&self, weight: &[i64], factor: i64) -> Self {
        let mut out = self.clone();
        for (o, w) in out.offset.iter_mut().zip(weight) {
            *o += factor * w;
        }
        out
    }

    /// `Π ↦ Π^{-1}`: negates both the continuous part and the offset.
    pub fn inverse(&self) -> Self {
        DynamicalState {
            p: self.p.iter().map(|x| -x).collect(),
            offset: self.offset.iter().map(|x| -x).collect(),
        }
    }
}

/// `b(u,s) = [s+1][s−1][u] / ([s]²[u+1])`.
pub fn b(params: &EllipticParams, u: Complex64, s: Complex64) -> Result<Complex64> {
    let bs = params.denominator(s, "[s]")?;
    let bu1 = params.denominator(u + 1.0, "[u+1]")?;
    Ok(params.bracket(s + 1.0) * params.bracket(s - 1.0) * params.bracket(u) / (bs * bs * bu1))
}

/// `b̄(u) = [u] / [u+1]`.
pub fn b_bar(params: &EllipticParams, u: Complex64) -> Result<Complex64> {
    Ok(params.bracket(u) / params.denominator(u + 1.0, "[u+1]")?)
}

/// `c(u,s) = [1][s+u] / ([s][u+1])`.
pub fn c(params: &EllipticParams, u: Complex64, s: Complex64) -> Result<Complex64> {
    let one = params.bracket(Complex64::new(1.0, 0.0));
    Ok(one * params.bracket(s + u) / (params.denominator(s, "[s]")? * params.denominator(u + 1.0, "[u+1]")?))
}

/// `c̄(u,s) = [1][s−u] / ([s][u+1])`.
pub fn c_bar(params: &EllipticParams, u: Complex64, s: Complex64) -> Result<Complex64> {
    let one = params.bracket(Complex64::new(1.0, 0.0));
    Ok(one * params.bracket(s - u) / (params.denominator(s, "[s]")? * params.denominator(u + 1.0, "[u+1]")?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RMatrixKind {
    Bar,
    Plus,
    Minus(RhoMinusVariant),
}

/// A matrix on `V ⊗ V` with the arguments it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteMatrix {
    pub u: Complex64,
    pub state: DynamicalState,
    pub kind: RMatrixKind,
    pub entries: CMatrix,
}

impl TwoSiteMatrix {
    pub fn rank(&self) -> usize {
        self.state.rank()
    }

    /// Entry `⟨v_{μ'} ⊗ v_{ν'}| R |v_μ ⊗ v_ν⟩`, colours 1-based.
    pub fn entry(&self, out: (usize, usize), input: (usize, usize)) -> Complex64 {
        let n = self.rank();
        self.entries[(pair_index(n, out.0, out.1), pair_index(n, input.0, input.1))]
    }
}

impl Serialize for TwoSiteMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Complex64>> =
            self.entries.row_iter().map(|row| row.iter().copied().collect()).collect();
        let mut s = serializer.serialize_struct("TwoSiteMatrix", 5)?;
        s.serialize_field("rank", &self.rank())?;
        s.serialize_field("u", &self.u)?;
        s.serialize_field("state", &self.state)?;
        s.serialize_field("kind", &self.kind)?;
        s.serialize_field("entries", &rows)?;
        s.end()
    }
}

#[inline]
pub fn pair_index(rank: usize, mu: usize, nu: usize) -> usize {
    rank * (mu - 1) + (nu - 1)
}

/// `R̄(z, Π)` with `z = q^{2u}` and `Π` read from `state`.
pub fn rbar(u: Complex64, state: &DynamicalState, params: &EllipticParams) -> Result<TwoSiteMatrix> {
    Ok(TwoSiteMatrix { u, state: state.clone(), kind: RMatrixKind::Bar, entries: rbar_entries(u, state, params)? })
}

pub(crate) fn rbar_entries(u: Complex64, state: &DynamicalState, params: &EllipticParams) -> Result<CMatrix> {
    let n = state.rank();
    let dim = n * n;
    let mut m = DMatrix::zeros(dim, dim);
    let one = Complex64::new(1.0, 0.0);
    for j in 1..=n {
        let k = pair_index(n, j, j);
        m[(k, k)] = one;
    }
    if n < 2 {
        return Ok(m);
    }
    let bu = params.bracket(u);
    let bu1 = params.denominator(u + 1.0, "[u+1]")?;
    let b1 = params.bracket(one);
    let weight_b_bar = bu / bu1;
    for j1 in 1..=n {
        for j2 in (j1 + 1)..=n {
            let s = state.pair(j1, j2);
            let bs = params.denominator(s, "[(P+h)_{j1,j2}]")?;
            let weight_b = params.bracket(s + 1.0) * params.bracket(s - 1.0) * bu / (bs * bs * bu1);
            let weight_c = b1 * params.bracket(s + u) / (bs * bu1);
            let weight_c_bar = b1 * params.bracket(s - u) / (bs * bu1);
            let (ab, ba) = (pair_index(n, j1, j2), pair_index(n, j2, j1));
            m[(ab, ab)] = weight_b;
            m[(ba, ba)] = weight_b_bar;
            m[(ab, ba)] = weight_c;
            m[(ba, ab)] = weight_c_bar;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus(RhoMinusVariant),
}

/// `R^±(z, Π) = ρ^±(z) R̄(z, Π)`.
pub fn r_full(u: Complex64, state: &DynamicalState, params: &EllipticParams, sign: Sign) -> Result<TwoSiteMatrix> {
    let (rho, kind) = match sign {
        Sign::Plus => (params.rho_plus(u)?, RMatrixKind::Plus),
        Sign::Minus(v) => (params.rho_minus(u, v)?, RMatrixKind::Minus(v)),
    };
    let mut out = rbar(u, state, params)?;
    out.entries *= rho;
    out.kind = kind;
    Ok(out)
}

/// The flip `v_μ ⊗ v_ν ↦ v_ν ⊗ v_μ`.
pub fn flip(rank: usize) -> CMatrix {
    let dim = rank * rank;
    let mut m = DMatrix::zeros(dim, dim);
    for a in 1..=rank {
        for b in 1..=rank {
            m[(pair_index(rank, b, a), pair_index(rank, a, b))] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

/// A source of two-site matrices, so that the checks can be run against a
/// deliberately corrupted R-matrix.
pub type RbarSource<'a> = dyn Fn(Complex64, &DynamicalState) -> Result<CMatrix> + Sync + 'a;

/// Embeds a two-site matrix acting on slots `(a, b)` of `V^{⊗3}`. When
/// `shift_slot` is set, the dynamical state is shifted by `ε̄` of that slot's
/// colour (untouched by the matrix, so input and output agree).
fn embed_three(
    rank: usize,
    slots: (usize, usize),
    u: Complex64,
    state: &DynamicalState,
    shift_slot: Option<usize>,
    source: &RbarSource<'_>,
) -> Result<CMatrix> {
    let dim = rank.pow(3);
    let cache: Vec<CMatrix> = match shift_slot {
        None => vec![source(u, state)?],
        Some(_) => (1..=rank).map(|mu| source(u, &state.shifted(mu, 1))).collect::<Result<_>>()?,
    };
    let mut out = DMatrix::zeros(dim, dim);
    for input in 0..dim {
        let colours = [input / (rank * rank) + 1, (input / rank) % rank + 1, input % rank + 1];
        let r = match shift_slot {
            None => &cache[0],
            Some(slot) => &cache[colours[slot] - 1],
        };
        let col = pair_index(rank, colours[slots.0], colours[slots.1]);
        for oa in 1..=rank {
            for ob in 1..=rank {
                let value = r[(pair_index(rank, oa, ob), col)];
                if value == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut o = colours;
                o[slots.0] = oa;
                o[slots.1] = ob;
                out[(((o[0] - 1) * rank + (o[1] - 1)) * rank + (o[2] - 1), input)] += value;
            }
        }
    }
    Ok(out)
}

/// Residual of
/// `R̄^{12}(u12, P+h^{(3)}) R̄^{13}(u13, P) R̄^{23}(u23, P+h^{(1)})
///  = R̄^{23}(u23, P) R̄^{13}(u13, P+h^{(2)}) R̄^{12}(u12, P)`.
pub fn check_dybe(
    u: [Complex64; 3],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<f64> {
    check_dybe_with(u, state, &|x, s| rbar_entries(x, s, params))
}

pub fn check_dybe_with(u: [Complex64; 3], state: &DynamicalState, source: &RbarSource<'_>) -> Result<f64> {
    let n = state.rank();
    let (u12, u13, u23) = (u[0] - u[1], u[0] - u[2], u[1] - u[2]);
    let lhs = embed_three(n, (0, 1), u12, state, Some(2), source)?
        * embed_three(n, (0, 2), u13, state, None, source)?
        * embed_three(n, (1, 2), u23, state, Some(0), source)?;
    let rhs = embed_three(n, (1, 2), u23, state, None, source)?
        * embed_three(n, (0, 2), u13, state, Some(1), source)?
        * embed_three(n, (0, 1), u12, state, None, source)?;
    Ok(linalg::residual(&lhs, &rhs))
}

/// Residuals of `R(z) R^{(21)}(1/z) = id` for the three normalisations.
#[derive(Debug, Clone, Serialize)]
pub struct UnitarityResiduals {
    pub rbar: f64,
    pub plus: f64,
    pub minus: Vec<(RhoMinusVariant, f64)>,
}

pub fn check_unitarity(u: Complex64, state: &DynamicalState, params: &EllipticParams) -> Result<UnitarityResiduals> {
    let n = state.rank();
    let flip = flip(n);
    let forward = rbar_entries(u, state, params)?;
    let backward = &flip * rbar_entries(-u, state, params)? * &flip;
    let product = &forward * &backward;
    let id = linalg::identity(n * n);
    let scaled = |factor: Complex64| linalg::residual(&(&product * factor), &id);
    let plus = scaled(params.rho_plus(u)? * params.rho_plus(-u)?);
    let minus = RhoMinusVariant::ALL
        .iter()
        .map(|&v| Ok((v, scaled(params.rho_minus(u, v)? * params.rho_minus(-u, v)?))))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitarityResiduals { rbar: linalg::residual(&product, &id), plus, minus })
}

/// Fails unless every weight-violating entry is exactly zero.
pub fn check_ice_rule(m: &TwoSiteMatrix) -> Result<()> {
    let n = m.rank();
    for (mu, nu, mu2, nu2) in colour_quads(n) {
        let mut a = [mu, nu];
        let mut b = [mu2, nu2];
        a.sort_unstable();
        b.sort_unstable();
        if a != b && m.entry((mu2, nu2), (mu, nu)) != Complex64::new(0.0, 0.0) {
            return Err(Error::domain(format!("weight-violating entry ({mu2}{nu2}),({mu}{nu})")));
        }
    }
    Ok(())
}

fn colour_quads(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (1..=n).flat_map(move |a| {
        (1..=n).flat_map(move |b| (1..=n).flat_map(move |c| (1..=n).map(move |d| (a, b, c, d))))
    })
}
