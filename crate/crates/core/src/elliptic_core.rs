//! Truncated infinite products, the odd theta kernel `Θ_p` and the additive
//! brackets `[u]`.
//!
//! Every multiplicative variable is carried additively: `z = exp(2u·Log q)`.
//! Fractional powers such as `z^{(N-1)/(rN)}` are formed on the additive side,
//! so all functions here are single valued in `u`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_POLE_GUARD: f64 = 1e-6;

/// Products are cut once the dropped factors are below this magnitude.
const TAIL_MAGNITUDE: f64 = 1e-18;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(x; base)_∞` truncated to `terms` factors.
pub fn pochhammer_truncated(x: Complex64, base: Complex64, terms: usize) -> Result<Complex64> {
    if base.norm() >= 1.0 {
        return Err(Error::domain(format!("pochhammer base {base} is not inside the unit disc")));
    }
    let mut out = ONE;
    let mut factor = x;
    for _ in 0..terms {
        out *= ONE - factor;
        factor *= base;
    }
    Ok(out)
}

/// `(x; base1, base2)_∞` truncated to a `terms1 × terms2` grid of factors.
pub fn double_pochhammer_truncated(
    x: Complex64,
    base1: Complex64,
    base2: Complex64,
    terms1: usize,
    terms2: usize,
) -> Result<Complex64> {
    if base1.norm() >= 1.0 || base2.norm() >= 1.0 {
        return Err(Error::domain(format!(
            "double pochhammer bases {base1}, {base2} must lie inside the unit disc"
        )));
    }
    let mut out = ONE;
    let mut row = x;
    for _ in 0..terms2 {
        let mut factor = row;
        for _ in 0..terms1 {
            out *= ONE - factor;
            factor *= base1;
        }
        row *= base2;
    }
    Ok(out)
}

/// `Θ_p(z) = (z;p)_∞ (p/z;p)_∞ (p;p)_∞` truncated to `terms` factors each.
pub fn theta_truncated(z: Complex64, p: Complex64, terms: usize) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::domain("theta kernel evaluated at z = 0"));
    }
    Ok(pochhammer_truncated(z, p, terms)?
        * pochhammer_truncated(p / z, p, terms)?
        * pochhammer_truncated(p, p, terms)?)
}

/// Which of the two printed definitions of `ρ^-` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RhoMinusVariant {
    /// `ρ^-(z) = ρ^+(pz)`.
    PShift,
    /// `ρ^-(z) = z^{2(N-1)/N} ρ^+(pz)`.
    PShiftWeighted,
}

impl RhoMinusVariant {
    pub const ALL: [RhoMinusVariant; 2] = [RhoMinusVariant::PShift, RhoMinusVariant::PShiftWeighted];

    pub fn name(self) -> &'static str {
        match self {
            RhoMinusVariant::PShift => "p-shift",
            RhoMinusVariant::PShiftWeighted => "p-shift-weighted",
        }
    }
}

/// The numeric ground field: nome data, rank, truncation and tolerances.
///
/// Only level 0 is supported, so the starred data `p*`, `r*`, `[u]*` coincide
/// with the unstarred ones.
#[derive(Debug, Clone)]
pub struct EllipticParams {
    q: Complex64,
    r: f64,
    rank: usize,
    truncation: usize,
    tol: f64,
    pole_guard: f64,
    log_q: Complex64,
    p: Complex64,
    tau: Complex64,
    p_powers: Vec<Complex64>,
    p_inf: Complex64,
}

impl EllipticParams {
    pub fn new(q: Complex64, r: f64, rank: usize) -> Result<Self> {
        let modulus = q.norm();
        if !(modulus > 0.0 && modulus < 1.0) {
            return Err(Error::domain(format!("need 0 < |q| < 1, got |q| = {modulus}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("need r > 0, got {r}")));
        }
        if rank == 0 {
            return Err(Error::domain("rank must be at least 1"));
        }
        let log_q = q.ln();
        let p = (2.0 * r * log_q).exp();
        if p.norm() >= 1.0 {
            return Err(Error::domain("|p| must be below 1"));
        }
        let truncation = ((TAIL_MAGNITUDE.ln() / p.norm().ln()).ceil() as usize).max(1);
        let tau = Complex64::new(0.0, -PI) / (r * log_q);
        let mut params = EllipticParams {
            q,
            r,
            rank,
            truncation,
            tol: DEFAULT_TOL,
            pole_guard: DEFAULT_POLE_GUARD,
            log_q,
            p,
            tau,
            p_powers: Vec::new(),
            p_inf: ONE,
        };
        params.refresh_cache();
        Ok(params)
    }

    pub fn real(q: f64, r: f64, rank: usize) -> Result<Self> {
        Self::new(Complex64::new(q, 0.0), r, rank)
    }

    /// Fixes the number of factors kept in every `p`-based product.
    pub fn with_truncation(mut self, terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::domain("truncation order must be positive"));
        }
        self.truncation = terms;
        self.refresh_cache();
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_pole_guard(mut self, guard: f64) -> Self {
        self.pole_guard = guard;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::domain("rank must be at least 1"));
        }
        self.rank = rank;
        Ok(self)
    }

    /// Only level 0 is implemented.
    pub fn with_level(self, level: i64) -> Result<Self> {
        if level != 0 {
            return Err(Error::domain(format!("only level 0 is supported, got {level}")));
        }
        Ok(self)
    }

    fn refresh_cache(&mut self) {
        let mut powers = Vec::with_capacity(self.truncation + 1);
        let mut power = ONE;
        for _ in 0..=self.truncation {
            powers.push(power);
            power *= self.p;
        }
        self.p_inf = powers[1..].iter().fold(ONE, |acc, pk| acc * (ONE - pk));
        self.p_powers = powers;
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn p(&self) -> Complex64 {
        self.p
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn log_q(&self) -> Complex64 {
        self.log_q
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn pole_guard(&self) -> f64 {
        self.pole_guard
    }

    /// `z = q^{2u}`.
    pub fn multiplicative(&self, u: Complex64) -> Complex64 {
        (2.0 * u * self.log_q).exp()
    }

    /// Number of factors for a product in `base`, matched to the magnitude
    /// `|p|^truncation` reached by the `p`-products.
    pub fn terms_for(&self, base: Complex64) -> usize {
        let b = base.norm();
        if b == 0.0 {
            return 1;
        }
        let ratio = self.p.norm().ln() / b.ln();
        ((self.truncation as f64 * ratio).ceil() as usize).max(1)
    }

    pub fn pochhammer_inf(&self, x: Complex64, base: Complex64) -> Result<Complex64> {
        if base.norm() >= 1.0 {
            return Err(Error::domain(format!("pochhammer base {base} is not inside the unit disc")));
        }
        pochhammer_truncated(x, base, self.terms_for(base))
    }

    pub fn double_pochhammer_inf(&self, x: Complex64, base1: Complex64, base2: Complex64) -> Result<Complex64> {
        if base1.norm() >= 1.0 || base2.norm() >= 1.0 {
            return Err(Error::domain("double pochhammer bases must lie inside the unit disc"));
        }
        double_pochhammer_truncated(x, base1, base2, self.terms_for(base1), self.terms_for(base2))
    }

    /// `Θ_p(z)` with this parameter set's `p`.
    pub fn theta_big(&self, z: Complex64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::domain("theta kernel evaluated at z = 0"));
        }
        Ok(self.theta_unchecked(z))
    }

    #[inline]
    fn theta_unchecked(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let mut out = self.p_inf;
        for k in 0..self.truncation {
            out *= (ONE - z * self.p_powers[k]) * (ONE - self.p_powers[k + 1] * zi);
        }
        out
    }

    /// `[u] = exp((u²/r - u)·Log q) Θ_p(q^{2u})`, an entire odd function of `u`.
    #[inline]
    pub fn bracket(&self, u: Complex64) -> Complex64 {
        let prefactor = ((u * u / self.r - u) * self.log_q).exp();
        prefactor * self.theta_unchecked(self.multiplicative(u))
    }

    /// `[u]` for use as a denominator: fails when `|[u]|` is below the pole guard.
    #[inline]
    pub fn denominator(&self, u: Complex64, factor: &str) -> Result<Complex64> {
        let value = self.bracket(u);
        self.guard(value, u, factor)
    }

    #[inline]
    pub(crate) fn guard(&self, value: Complex64, at: Complex64, factor: &str) -> Result<Complex64> {
        let modulus = value.norm();
        if modulus < self.pole_guard || !modulus.is_finite() {
            return Err(Error::Pole { factor: factor.to_string(), at, modulus });
        }
        Ok(value)
    }

    /// `[0]' = -2 Log q (p;p)_∞³`.
    pub fn bracket_deriv_zero(&self) -> Complex64 {
        -2.0 * self.log_q * self.p_inf * self.p_inf * self.p_inf
    }

    /// The curly bracket `{q^{2a}} = (q^{2a}; p, q^{2N})_∞`, argument additive.
    fn curly(&self, a: Complex64) -> Result<Complex64> {
        let t = self.multiplicative(Complex64::new(self.rank as f64, 0.0));
        self.double_pochhammer_inf(self.multiplicative(a), self.p, t)
    }

    pub fn rho_plus(&self, u: Complex64) -> Result<Complex64> {
        let n = self.rank as f64;
        let r = self.r;
        let c = |x: f64| Complex64::new(x, 0.0);
        let prefactor = (-(n - 1.0) / n * self.log_q + 2.0 * u * (n - 1.0) / (r * n) * self.log_q).exp();
        let numerator = self.curly(c(n - 1.0) + u)?
            * self.curly(c(1.0) + u)?
            * self.curly(c(r + n) - u)?
            * self.curly(c(r) - u)?;
        let mut denominator = ONE;
        for (arg, label) in [
            (c(n) + u, "{q^{2N} z}"),
            (u, "{z}"),
            (c(r + n - 1.0) - u, "{p q^{2N-2}/z}"),
            (c(r + 1.0) - u, "{p q^2/z}"),
        ] {
            let value = self.curly(arg)?;
            denominator *= self.guard(value, u, label)?;
        }
        Ok(prefactor * numerator / denominator)
    }

    pub fn rho_minus(&self, u: Complex64, variant: RhoMinusVariant) -> Result<Complex64> {
        let shifted = self.rho_plus(u + self.r)?;
        Ok(match variant {
            RhoMinusVariant::PShift => shifted,
            RhoMinusVariant::PShiftWeighted => {
                let n = self.rank as f64;
                (2.0 * u * 2.0 * (n - 1.0) / n * self.log_q).exp() * shifted
            }
        })
    }

    /// `ϱ = (p;p)(p*q²;p*) / ((p*;p*)(pq²;p))`, with `p* = p` at level 0.
    pub fn varrho(&self) -> Result<Complex64> {
        let p = self.p;
        let p_star = p;
        let q2 = self.q * self.q;
        Ok(self.pochhammer_inf(p, p)? * self.pochhammer_inf(p_star * q2, p_star)?
            / (self.pochhammer_inf(p_star, p_star)? * self.pochhammer_inf(p * q2, p)?))
    }
}

impl Default for EllipticParams {
    fn default() -> Self {
        EllipticParams::real(0.5, 3.0, 2).expect("default parameters are valid")
    }
}
