//! Minimum-error discrimination of quantum states.
//!
//! Given `M` density matrices `ρ_j` with priors `ξ_j`, find the measurement
//! `{Π_j}` maximizing the average success probability
//! `P_s = Σ_j ξ_j Tr ρ_j Π_j`, and prove the answer optimal.
//!
//! - [`hermitian`]: small dense Hermitian linear algebra.
//! - [`model`]: states, ensembles, POVMs and the objective.
//! - [`solver`]: the fixed-point iteration.
//! - [`certificate`]: dual feasibility, slackness and the certified gap.
//! - [`sdp`]: the equivalent semidefinite program and SDPA export.
//! - [`oracle`]: brute-force oracles and a Monte-Carlo game simulator.
//! - [`scenario`]: the three-state coplanar qubit family and its prior sweep.
//! - [`problem`]: JSON problem files.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod hermitian;
pub mod model;
pub mod oracle;
pub mod problem;
pub mod scenario;
pub mod sdp;
pub mod solver;

pub use error::{Error, Result};
