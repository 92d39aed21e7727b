//! Numerics for the face-type elliptic quantum group of type `A_{N-1}` at
//! level 0: theta brackets, the dynamical R-matrix, elliptic weight functions
//! and stable envelopes, the shuffle product, and the Gelfand-Tsetlin
//! representation on `V^{⊗n}`, together with residual-based verifiers.

pub mod combinatorics;
pub mod elliptic_core;
pub mod error;
pub mod gt_representation;
pub mod linalg;
pub mod rmatrix;
pub mod sampling;
pub mod shuffle;
pub mod verify;
pub mod weight_functions;

pub use combinatorics::{Lambda, PartitionIndex};
pub use elliptic_core::{EllipticParams, RhoMinusVariant};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rmatrix::DynamicalState;
pub use verify::{Suite, SuiteRegistry, SuiteReport, VerifyConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
