//! The `⋆`-product on symmetric functions of the level variables, with
//! unit, associativity and closure checks on the span of the `W̃_I`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::combinatorics::{enumerate_partitions, Lambda, PartitionIndex};
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rmatrix::DynamicalState;
use crate::weight_functions::{weight_w, TVariables, WeightVariant, DEFAULT_SYM_BUDGET};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

type Evaluator = dyn Fn(&TVariables, &DynamicalState) -> Result<Complex64> + Send + Sync;

/// A function of `(t, z, Π)` symmetric in each `t^{(l)}` group, graded by `λ`.
#[derive(Clone)]
pub struct SymmetricFunctionValue {
    lambda: Lambda,
    label: String,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for SymmetricFunctionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricFunctionValue").field("lambda", &self.lambda).field("label", &self.label).finish()
    }
}

impl SymmetricFunctionValue {
    pub fn new(
        lambda: Lambda,
        label: impl Into<String>,
        eval: impl Fn(&TVariables, &DynamicalState) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        SymmetricFunctionValue { lambda, label: label.into(), eval: Arc::new(eval) }
    }

    /// The constant `1` in degree zero.
    pub fn unit(rank: usize) -> Self {
        let lambda = Lambda::new(vec![0; rank]).expect("rank >= 1");
        Self::new(lambda, "1", |_, _| Ok(ONE))
    }

    /// `W̃_I(t, z, Π)`.
    pub fn weight(part: &PartitionIndex, params: &EllipticParams) -> Self {
        let part = part.clone();
        let params = params.clone();
        let label = format!("W[{part}]");
        Self::new(part.lambda(), label, move |t, state| {
            Ok(weight_w(&part, t, state, &params, WeightVariant::Tilde)?.value)
        })
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn evaluate(&self, t: &TVariables, state: &DynamicalState) -> Result<Complex64> {
        (self.eval)(t, state)
    }
}

/// `Ξ(t, t', z, z') = ∏_l ∏_a (∏_b [v'^{(l+1)}_b − v^{(l)}_a] / [v'^{(l+1)}_b − v^{(l)}_a + 1]
/// · ∏_c [v'^{(l)}_c − v^{(l)}_a + 1] / [v'^{(l)}_c − v^{(l)}_a])`, with `v'^{(N)} = z'`.
pub fn xi_kernel(t: &TVariables, t_prime: &TVariables, params: &EllipticParams) -> Result<Complex64> {
    if t.rank() != t_prime.rank() {
        return Err(Error::domain("xi kernel arguments of different rank"));
    }
    let mut out = ONE;
    for l in 1..t.rank() {
        for &va in t.level(l) {
            for &w in t_prime.level(l + 1) {
                out *= params.bracket(w - va) / params.denominator(w - va + 1.0, "[v' - v + 1]")?;
            }
            for &w in t_prime.level(l) {
                out *= params.bracket(w - va + 1.0) / params.denominator(w - va, "[v' - v]")?;
            }
        }
    }
    Ok(out)
}

/// All `k`-element subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for x in start..n {
            if n - x < k - current.len() {
                break;
            }
            current.push(x);
            rec(x + 1, n, k, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `(F ⋆ G)(t, z, Π)`. The first `m = |λ_F|` entries of `z` belong to `F`; `F`
/// is evaluated at `Π` shifted by `−λ_G`.
///
/// Since both factors are symmetric in each group, the normalized sum over
/// `∏_l Sym(λ^{(l)} + λ'^{(l)})` collapses to a sum over the ways of choosing
/// which variables of each group go to `F`.
pub fn star_product_at(
    f: &SymmetricFunctionValue,
    g: &SymmetricFunctionValue,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<Complex64> {
    let rank = f.lambda.rank();
    if g.lambda.rank() != rank || t.rank() != rank {
        return Err(Error::domain("star product of functions of different rank"));
    }
    let m = f.lambda.n();
    if t.z().len() != m + g.lambda.n() {
        return Err(Error::domain(format!("{} spectral parameters for degree {} + {}", t.z().len(), m, g.lambda.n())));
    }
    let sizes: Vec<(usize, usize)> = (1..rank).map(|l| (f.lambda.partial(l), g.lambda.partial(l))).collect();
    for (l, &(a, b)) in sizes.iter().enumerate() {
        if t.level(l + 1).len() != a + b {
            return Err(Error::domain(format!("level {} has {} variables, expected {}", l + 1, t.level(l + 1).len(), a + b)));
        }
    }
    let count = sizes.iter().try_fold(1usize, |acc, &(a, b)| acc.checked_mul(binomial(a + b, a)));
    if !matches!(count, Some(c) if c <= DEFAULT_SYM_BUDGET) {
        return Err(Error::Resource("star product symmetrization exceeds the budget".into()));
    }

    let (z_f, z_g) = t.z().split_at(m);
    let f_state = state.with_scaled_weight(&g.lambda.weight(), -1);
    let choices: Vec<Vec<Vec<usize>>> = sizes.iter().map(|&(a, b)| subsets(a + b, a)).collect();
    let mut counters = vec![0usize; choices.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut f_levels = Vec::with_capacity(choices.len());
        let mut g_levels = Vec::with_capacity(choices.len());
        for (l, options) in choices.iter().enumerate() {
            let chosen = &options[counters[l]];
            let vars = t.level(l + 1);
            f_levels.push(chosen.iter().map(|&k| vars[k]).collect::<Vec<_>>());
            g_levels.push((0..vars.len()).filter(|k| !chosen.contains(k)).map(|k| vars[k]).collect::<Vec<_>>());
        }
        let tf = TVariables::new(f_levels, z_f.to_vec());
        let tg = TVariables::new(g_levels, z_g.to_vec());
        total += f.evaluate(&tf, &f_state)? * g.evaluate(&tg, state)? * xi_kernel(&tf, &tg, params)?;

        let mut k = 0;
        loop {
            if k == counters.len() {
                return Ok(total);
            }
            counters[k] += 1;
            if counters[k] < choices[k].len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
    }
}

/// `F ⋆ G` as a new symmetric function of degree `λ_F + λ_G`.
pub fn star_product(f: &SymmetricFunctionValue, g: &SymmetricFunctionValue, params: &EllipticParams) -> Result<SymmetricFunctionValue> {
    if f.lambda.rank() != g.lambda.rank() {
        return Err(Error::domain("star product of functions of different rank"));
    }
    let lambda = Lambda::new(f.lambda.parts().iter().zip(g.lambda.parts()).map(|(a, b)| a + b).collect())?;
    let label = format!("({} * {})", f.label, g.label);
    let (f, g, params) = (f.clone(), g.clone(), params.clone());
    Ok(SymmetricFunctionValue::new(lambda, label, move |t, state| star_product_at(&f, &g, t, state, &params)))
}

/// Result of expanding `W̃_I ⋆ W̃_{I'}` in the `W̃_K` basis of the combined degree.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub basis: Vec<PartitionIndex>,
    pub coefficients: Vec<Complex64>,
    /// Largest relative mismatch at the independent check points.
    pub residual: f64,
}

/// Solves for the coefficients from the specializations `t = z_K`, then
/// compares both sides at the given independent level variables.
pub fn check_closure(
    product: &SymmetricFunctionValue,
    z: &[Complex64],
    check_points: &[TVariables],
    state: &DynamicalState,
    params: &EllipticParams,
) -> Result<ClosureReport> {
    let lambda = product.lambda().clone();
    let basis = enumerate_partitions(&lambda)?;
    let m = basis.len();
    let mut system = CMatrix::zeros(m, m);
    let mut rhs = CMatrix::zeros(m, 1);
    for (row, i) in basis.iter().enumerate() {
        let t = TVariables::specialize(i, z)?;
        for (col, k) in basis.iter().enumerate() {
            system[(row, col)] = weight_w(k, &t, state, params, WeightVariant::Tilde)?.value;
        }
        rhs[(row, 0)] = product.evaluate(&t, state)?;
    }
    let inverse = linalg::inverse_guarded(&system, 1e12, 0)?;
    let coefficients: Vec<Complex64> = (inverse * rhs).iter().copied().collect();
    let mut residual = 0.0f64;
    for t in check_points {
        let t = t.with_z(z.to_vec());
        let lhs = product.evaluate(&t, state)?;
        let mut expanded = Complex64::new(0.0, 0.0);
        for (k, c) in basis.iter().zip(&coefficients) {
            expanded += c * weight_w(k, &t, state, params, WeightVariant::Tilde)?.value;
        }
        residual = residual.max(linalg::scalar_residual(lhs, expanded));
    }
    Ok(ClosureReport { basis, coefficients, residual })
}

/// Spot checks of the wheel condition for `W_I = H_λ W̃_I`: at
/// `v^{(l)}_a − v^{(l+ε)}_c = ε`, `v^{(l+ε)}_c = v^{(l)}_b` (offset by `delta`)
/// the entire weight function must vanish. Returns `|W(wheel)| / |W(t)|` for
/// every admissible `(l, ε, a, b, c)`.
pub fn wheel_spot_check(
    part: &PartitionIndex,
    t: &TVariables,
    state: &DynamicalState,
    params: &EllipticParams,
    delta: f64,
) -> Result<Vec<f64>> {
    let rank = part.rank();
    let generic = weight_w(part, t, state, params, WeightVariant::Entire)?.value.norm();
    let mut out = Vec::new();
    for l in 1..rank {
        for eps in [1i64, -1] {
            let other = l as i64 + eps;
            if other < 1 || other > rank as i64 {
                continue;
            }
            let other = other as usize;
            let size = t.level(l).len();
            for a in 0..size {
                for b in 0..size {
                    if a == b {
                        continue;
                    }
                    for c in 0..t.level(other).len() {
                        let anchor = t.level(other)[c];
                        let config = t
                            .shifted(l, b + 1, anchor - t.level(l)[b])
                            .shifted(l, a + 1, anchor + eps as f64 + delta - t.level(l)[a]);
                        let value = weight_w(part, &config, state, params, WeightVariant::Entire)?.value;
                        out.push(value.norm() / generic.max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> EllipticParams {
        EllipticParams::real(0.5, 3.0, 2).unwrap()
    }

    fn state() -> DynamicalState {
        DynamicalState::new(vec![c(0.33, 0.1), c(0.0, 0.0)])
    }

    fn word(w: &str) -> PartitionIndex {
        PartitionIndex::parse(2, w).unwrap()
    }

    #[test]
    fn xi_with_empty_second_factor_is_one() {
        let p = params();
        let t = TVariables::new(vec![vec![c(0.1, 0.2)]], vec![c(0.3, 0.0)]);
        let empty = TVariables::new(vec![vec![]], vec![]);
        assert_eq!(xi_kernel(&t, &empty, &p).unwrap(), ONE);
    }

    #[test]
    fn xi_two_factor_by_hand() {
        let p = params();
        let (v, w, u) = (c(0.12, 0.05), c(-0.21, 0.11), c(0.37, -0.04));
        let t = TVariables::new(vec![vec![v]], vec![c(0.5, 0.0)]);
        let tp = TVariables::new(vec![vec![w]], vec![u]);
        let expected = p.bracket(u - v) / p.bracket(u - v + 1.0) * p.bracket(w - v + 1.0) / p.bracket(w - v);
        assert!((xi_kernel(&t, &tp, &p).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn xi_is_not_antisymmetric() {
        let p = params();
        let t = TVariables::new(vec![vec![c(0.12, 0.05)]], vec![c(0.5, 0.1)]);
        let tp = TVariables::new(vec![vec![c(-0.21, 0.11)]], vec![c(0.37, -0.04)]);
        let forward = xi_kernel(&t, &tp, &p).unwrap();
        let backward = xi_kernel(&tp, &t, &p).unwrap();
        assert!((forward * backward - ONE).norm() > 1e-3);
    }

    #[test]
    fn unit_is_two_sided() {
        let p = params();
        let f = SymmetricFunctionValue::weight(&word("12"), &p);
        let one = SymmetricFunctionValue::unit(2);
        let t = TVariables::new(vec![vec![c(0.14, -0.06)]], vec![c(0.21, 0.05), c(-0.17, 0.08)]);
        let direct = f.evaluate(&t, &state()).unwrap();
        let left = star_product_at(&one, &f, &t, &state(), &p).unwrap();
        let right = star_product_at(&f, &one, &t, &state(), &p).unwrap();
        assert!(linalg::scalar_residual(direct, left) < 1e-13);
        assert!(linalg::scalar_residual(direct, right) < 1e-13);
    }

    #[test]
    fn subsets_match_binomials() {
        for n in 0..6 {
            for k in 0..=n {
                assert_eq!(subsets(n, k).len(), binomial(n, k));
            }
        }
    }

    #[test]
    fn associative_on_single_sites() {
        let p = params();
        let (f, g, h) = (
            SymmetricFunctionValue::weight(&word("1"), &p),
            SymmetricFunctionValue::weight(&word("2"), &p),
            SymmetricFunctionValue::weight(&word("1"), &p),
        );
        let left = star_product(&star_product(&f, &g, &p).unwrap(), &h, &p).unwrap();
        let right = star_product(&f, &star_product(&g, &h, &p).unwrap(), &p).unwrap();
        let t = TVariables::new(vec![vec![c(0.14, -0.06), c(-0.31, 0.12)]], vec![c(0.21, 0.05), c(-0.17, 0.08), c(0.44, -0.13)]);
        let a = left.evaluate(&t, &state()).unwrap();
        let b = right.evaluate(&t, &state()).unwrap();
        assert!(linalg::scalar_residual(a, b) < 1e-12);
    }

    #[test]
    fn product_of_single_sites_is_closed() {
        let p = params();
        let z = [c(0.21, 0.05), c(-0.17, 0.08)];
        let pools = [[c(0.14, -0.06), c(-0.31, 0.12)], [c(-0.38, 0.19), c(0.09, 0.27)]];
        for (a, b) in [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")] {
            let product = star_product(&SymmetricFunctionValue::weight(&word(a), &p), &SymmetricFunctionValue::weight(&word(b), &p), &p).unwrap();
            let size = product.lambda().partial(1);
            let checks: Vec<TVariables> = pools.iter().map(|pool| TVariables::new(vec![pool[..size].to_vec()], vec![])).collect();
            let report = check_closure(&product, &z, &checks, &state(), &p).unwrap();
            assert!(report.residual < 1e-10, "{a} * {b}: {}", report.residual);
        }
    }

    #[test]
    fn product_of_weight_functions_is_the_concatenated_weight_function() {
        let p = params();
        let z = vec![c(0.21, 0.05), c(-0.17, 0.08), c(0.44, -0.13)];
        let f = SymmetricFunctionValue::weight(&word("21"), &p);
        let g = SymmetricFunctionValue::weight(&word("1"), &p);
        let t = TVariables::new(vec![vec![c(0.14, -0.06), c(-0.31, 0.12)]], z.clone());
        let product = star_product_at(&f, &g, &t, &state(), &p).unwrap();
        let direct = weight_w(&word("211"), &t, &state(), &p, WeightVariant::Tilde).unwrap().value;
        assert!(linalg::scalar_residual(product, direct) < 1e-12);
    }

    #[test]
    fn wheel_condition_spot_checks() {
        let p = EllipticParams::real(0.5, 3.0, 3).unwrap();
        let st = DynamicalState::new(vec![c(0.33, 0.1), c(-0.12, 0.2), c(0.0, 0.0)]);
        let z = vec![c(0.21, 0.05), c(-0.17, 0.08), c(0.44, -0.13), c(-0.36, -0.07)];
        let t = TVariables::new(
            vec![vec![c(0.14, -0.06), c(-0.31, 0.12)], vec![c(0.27, 0.18), c(-0.05, -0.22), c(0.39, 0.03)]],
            z,
        );
        let part = PartitionIndex::parse(3, "2131").unwrap();
        let ratios = wheel_spot_check(&part, &t, &st, &p, 1e-5).unwrap();
        assert!(!ratios.is_empty());
        assert!(ratios.iter().all(|&x| x < 1e-3), "{ratios:?}");
    }
}
