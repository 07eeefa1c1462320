//! # qig-core
//!
//! Fisher-information geometry of parametrized density matrices under
//! p-local quantum measurements.
//!
//! The crate computes symmetric logarithmic derivatives (SLDs), the quantum
//! and classical Fisher information matrices, and a family of upper bounds on
//!
//! ```text
//! Γ_p = max over p-local POVMs of Tr[(p F_Q)^{-1} F_Cp]
//! ```
//!
//! together with covariance-side lower bounds (Holevo, Nagaoka and the
//! frame-based `A_u` family). Numerical POVM search and a Monte-Carlo
//! estimation harness provide achievable reference points for every bound.
//!
//! The crate is `no_std` and only needs `alloc`. IO, report formats and the
//! command-line front end live in the companion `qig` crate.
//!
//! ## Layout
//!
//! - [`numlin`]: dense complex Hermitian linear algebra.
//! - [`models`]: parametrized state families and their tangents.
//! - [`fisher`]: SLDs, QFIM/CFIM, Bures distance, commutator diagnostics.
//! - [`bounds`]: closed-form upper bounds on `Γ_p` and the covariance conversion.
//! - [`convex`]: Holevo, Nagaoka and frame-based covariance bounds.
//! - [`measurement`]: POVMs and the `Γ_p` search.
//! - [`estimation`]: outcome sampling and maximum-likelihood experiments.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod convex;
mod error;
pub mod estimation;
pub mod fisher;
mod fmath;
pub mod measurement;
pub mod models;
pub mod numlin;
pub mod rng;

pub use error::{Error, Result};
pub use numlin::{ComplexMatrix, HermitianOperator, Limits, RealMatrix, C64};
