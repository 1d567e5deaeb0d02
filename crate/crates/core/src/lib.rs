//! Learning to disentangle multiqubit states from two-qubit observations.
//!
//! The quantum side ([`qsim`], [`entanglement`], [`solver`], [`env`], [`pqc`])
//! is generic over the scalar type; the learning side ([`nn`], [`policy`],
//! [`trainer`]) works in `f64`. Concrete aliases for both precisions are
//! exported at the crate root.
//!
//! ```
//! use disentangle::{DisentangleEnv64, EntanglementPattern};
//! use disentangle::env::EnvConfig;
//!
//! let pattern: EntanglementPattern = "RR".parse().unwrap();
//! let mut env = DisentangleEnv64::new(pattern, EnvConfig::default()).unwrap();
//! env.reset(7).unwrap();
//! let out = env.step(0).unwrap();
//! assert!(out.success);
//! ```

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entanglement;
pub mod env;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod policy;
pub mod pqc;
pub mod qsim;
pub mod scalar;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
pub use qsim::EntanglementPattern;
pub use scalar::Real;

pub type CMatrix64 = linalg::CMatrix<f64>;
pub type CMatrix32 = linalg::CMatrix<f32>;
pub type Statevector64 = qsim::Statevector<f64>;
pub type Statevector32 = qsim::Statevector<f32>;
pub type PairDensityMatrix64 = qsim::PairDensityMatrix<f64>;
pub type PairDensityMatrix32 = qsim::PairDensityMatrix<f32>;
pub type ConcurrenceReport64 = entanglement::ConcurrenceReport<f64>;
pub type ConcurrenceReport32 = entanglement::ConcurrenceReport<f32>;
pub type DisentanglingGate64 = solver::DisentanglingGate<f64>;
pub type DisentanglingGate32 = solver::DisentanglingGate<f32>;
pub type DisentangleEnv64 = env::DisentangleEnv<f64>;
pub type DisentangleEnv32 = env::DisentangleEnv<f32>;
pub type Observation64 = env::Observation<f64>;
pub type Observation32 = env::Observation<f32>;
pub type PqcParameters64 = pqc::PqcParameters<f64>;
pub type PqcParameters32 = pqc::PqcParameters<f32>;
