//! Residual-based verification suites, registered by name.
//!
//! A [`Suite`] lists [`CaseSpec`]s; the registry runs them in parallel and
//! collects a [`SuiteReport`]. Every random draw is keyed by
//! `(seed, case label, sample index)`, so reports do not depend on scheduling.

mod suites;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::Lambda;
use crate::elliptic_core::EllipticParams;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rmatrix::{pair_index, rbar_entries, DynamicalState};
use crate::sampling::{with_redraws, Sampler};

pub use suites::{GtSuite, RmatrixSuite, ShuffleSuite, ThetaSuite, WeightsSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Flips the sign of the `c̄` entry of `R̄` for the colour pair `(1, 2)`.
    NegateCBar,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub q: f64,
    pub r: f64,
    pub ranks: Vec<usize>,
    pub max_sites: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Tolerance for checks that pass through a matrix inversion.
    pub tol_inverse: f64,
    pub truncation: Option<usize>,
    pub fault: Option<Fault>,
    /// An extra shape exercised by the weights and gt suites.
    pub lambda: Option<Lambda>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            q: 0.5,
            r: 3.0,
            ranks: vec![2, 3],
            max_sites: 4,
            samples: 50,
            seed: 1,
            tol: 1e-8,
            tol_inverse: 1e-6,
            truncation: None,
            fault: None,
            lambda: None,
        }
    }
}

impl VerifyConfig {
    pub fn params(&self, rank: usize) -> Result<EllipticParams> {
        let params = EllipticParams::real(self.q, self.r, rank)?;
        match self.truncation {
            Some(m) => params.with_truncation(m),
            None => Ok(params),
        }
    }

    /// Sample count for checks that build dense module operators.
    pub fn heavy_samples(&self) -> usize {
        (self.samples / 10).max(1)
    }

    /// `R̄` entries, with the configured fault applied.
    pub fn rbar(&self, u: Complex64, state: &DynamicalState, params: &EllipticParams) -> Result<CMatrix> {
        let mut m = rbar_entries(u, state, params)?;
        if self.fault == Some(Fault::NegateCBar) && state.rank() >= 2 {
            let (ab, ba) = (pair_index(state.rank(), 1, 2), pair_index(state.rank(), 2, 1));
            m[(ba, ab)] = -m[(ba, ab)];
        }
        Ok(m)
    }
}

/// How a residual is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Passes when the residual is below the bound.
    Below(f64),
    /// Passes only when the residual is exactly zero.
    Exact,
    /// A variant expected to fail: passes when the residual exceeds the bound.
    Above(f64),
    /// Reported only; never fails.
    Report,
}

impl Expectation {
    pub fn judge(self, residual: f64) -> bool {
        match self {
            Expectation::Below(tol) => residual < tol,
            Expectation::Exact => residual == 0.0,
            Expectation::Above(bound) => residual > bound,
            Expectation::Report => true,
        }
    }

    pub fn gated(self) -> bool {
        matches!(self, Expectation::Below(_) | Expectation::Exact)
    }
}

/// `(max residual, number of samples)`.
pub type CaseOutcome = (f64, usize);

type CaseFn = Box<dyn Fn(&VerifyConfig) -> Result<CaseOutcome> + Send + Sync>;

pub struct CaseSpec {
    pub name: String,
    /// The identity being checked, by role.
    pub paper_ref: &'static str,
    pub expectation: Expectation,
    run: CaseFn,
}

impl CaseSpec {
    pub fn new(
        name: impl Into<String>,
        paper_ref: &'static str,
        expectation: Expectation,
        run: impl Fn(&VerifyConfig) -> Result<CaseOutcome> + Send + Sync + 'static,
    ) -> Self {
        CaseSpec { name: name.into(), paper_ref, expectation, run: Box::new(run) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub paper_ref: String,
    pub residual: f64,
    pub samples: usize,
    pub expectation: Expectation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: Vec<CaseResult>,
    /// Largest residual among the gated cases.
    pub max_residual: f64,
    pub seed: u64,
    pub pass: bool,
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn cases(&self, cfg: &VerifyConfig) -> Vec<CaseSpec>;
}

pub struct SuiteRegistry {
    suites: Vec<Box<dyn Suite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        SuiteRegistry { suites: Vec::new() }
    }

    /// `theta`, `rmatrix`, `weights`, `shuffle`, `gt`.
    pub fn standard() -> Self {
        let mut reg = Self::empty();
        for suite in [
            Box::new(ThetaSuite) as Box<dyn Suite>,
            Box::new(RmatrixSuite),
            Box::new(WeightsSuite),
            Box::new(ShuffleSuite),
            Box::new(GtSuite),
        ] {
            reg.register(suite).expect("distinct names");
        }
        reg
    }

    pub fn register(&mut self, suite: Box<dyn Suite>) -> Result<()> {
        if self.get(suite.name()).is_some() {
            return Err(Error::domain(format!("suite {} registered twice", suite.name())));
        }
        self.suites.push(suite);
        Ok(())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.suites.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Suite> {
        self.suites.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn run(&self, name: &str, cfg: &VerifyConfig) -> Result<SuiteReport> {
        let suite = self.get(name).ok_or_else(|| Error::domain(format!("unknown suite {name}")))?;
        Ok(run_suite(suite, cfg))
    }
}

pub fn run_suite(suite: &dyn Suite, cfg: &VerifyConfig) -> SuiteReport {
    let cases: Vec<CaseResult> = suite
        .cases(cfg)
        .into_par_iter()
        .map(|spec| {
            let (residual, samples, error) = match (spec.run)(cfg) {
                Ok((res, n)) => (res, n, None),
                Err(e) => (f64::INFINITY, 0, Some(e.to_string())),
            };
            let pass = error.is_none() && spec.expectation.judge(residual);
            CaseResult {
                name: spec.name,
                paper_ref: spec.paper_ref.to_string(),
                residual,
                samples,
                expectation: spec.expectation,
                pass,
                error,
            }
        })
        .collect();
    let max_residual =
        cases.iter().filter(|c| c.expectation.gated()).map(|c| c.residual).fold(0.0, f64::max);
    let pass = cases.iter().all(|c| c.pass);
    SuiteReport { suite: suite.name().to_string(), cases, max_residual, seed: cfg.seed, pass }
}

/// Largest residual of `check` over `count` keyed samples, in parallel.
pub fn sweep(cfg: &VerifyConfig, label: &str, count: usize, check: impl Fn(&mut Sampler) -> Result<f64> + Sync) -> Result<CaseOutcome> {
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|k| with_redraws(cfg.seed, label, k, &check))
        .collect::<Result<_>>()?;
    Ok((values.into_iter().fold(0.0, f64::max), count))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dummy;

    impl Suite for Dummy {
        fn name(&self) -> &'static str {
            "theta"
        }

        fn cases(&self, _: &VerifyConfig) -> Vec<CaseSpec> {
            vec![
                CaseSpec::new("ok", "none", Expectation::Below(1.0), |_| Ok((0.5, 1))),
                CaseSpec::new("fails", "none", Expectation::Below(1.0), |_| Ok((2.0, 1))),
                CaseSpec::new("report", "none", Expectation::Report, |_| Ok((9.0, 1))),
                CaseSpec::new("error", "none", Expectation::Report, |_| Err(Error::domain("x"))),
            ]
        }
    }

    #[test]
    fn expectations_judge() {
        assert!(Expectation::Below(1e-8).judge(1e-9));
        assert!(!Expectation::Below(1e-8).judge(1e-8));
        assert!(Expectation::Exact.judge(0.0) && !Expectation::Exact.judge(1e-300));
        assert!(Expectation::Above(1e-3).judge(0.1) && !Expectation::Above(1e-3).judge(1e-4));
        assert!(Expectation::Report.judge(f64::INFINITY));
    }

    #[test]
    fn report_aggregates_gated_cases() {
        let report = run_suite(&Dummy, &VerifyConfig::default());
        assert_eq!(report.cases.len(), 4);
        assert_eq!(report.max_residual, 2.0);
        assert!(!report.pass);
        assert!(report.cases[3].error.is_some() && !report.cases[3].pass);
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut reg = SuiteRegistry::standard();
        assert_eq!(reg.names(), ["theta", "rmatrix", "weights", "shuffle", "gt"]);
        assert!(reg.register(Box::new(Dummy)).is_err());
        assert!(reg.run("nope", &VerifyConfig::default()).is_err());
    }

    #[test]
    fn fault_flips_one_entry() {
        let cfg = VerifyConfig { fault: Some(Fault::NegateCBar), ..VerifyConfig::default() };
        let params = cfg.params(2).unwrap();
        let state = DynamicalState::new(vec![Complex64::new(0.3, 0.1), Complex64::new(0.0, 0.0)]);
        let u = Complex64::new(0.2, 0.05);
        let clean = rbar_entries(u, &state, &params).unwrap();
        let bad = cfg.rbar(u, &state, &params).unwrap();
        let diff: Vec<_> = clean.iter().zip(bad.iter()).filter(|(a, b)| a != b).collect();
        assert_eq!(diff.len(), 1);
    }
}
