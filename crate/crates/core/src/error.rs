use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator fell below the pole guard.
    #[error("near-pole evaluation of {factor} at {at} (|value| = {modulus:.3e})")]
    Pole {
        factor: String,
        at: Complex64,
        modulus: f64,
    },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Gauss pivot too ill-conditioned; the caller should resample.
    #[error("ill-conditioned pivot {pivot} (condition number {cond:.3e})")]
    Singular { pivot: usize, cond: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for the failures that rejection sampling is allowed to retry.
    pub fn is_resample(&self) -> bool {
        matches!(self, Error::Pole { .. } | Error::Singular { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
