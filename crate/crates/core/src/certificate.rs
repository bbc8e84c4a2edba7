//! Optimality certificates.
//!
//! A POVM `{Π_j}` is optimal iff there is a Hermitian `λ` with
//! `λ - ξ_j ρ_j ⪰ 0` for every `j` (dual feasibility) and
//! `(λ - ξ_j ρ_j) Π_j = 0` (complementary slackness). Any dual-feasible `λ′`
//! bounds the optimum from above: `Σ ξ_j Tr ρ_j Π_j ≤ Σ Tr λ′ Π_j = Tr λ′`.
//!
//! The `λ` built from a non-optimal POVM is usually infeasible, so
//! [`dual_upper_bound`] shifts it by `δ I` with the smallest `δ ≥ 0` that
//! restores feasibility. The difference between that bound and the achieved
//! success probability is the certified gap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{min_eigenvalue, HermitianMatrix, DEFAULT_RANK_CUTOFF};
use crate::model::{success_probability, Ensemble, Povm};
use crate::solver::lagrange_operator;

/// Default tolerance for the slackness and Helstrom residual checks.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// `λ′ = λ + δ I`, feasible by construction.
    pub feasible_dual: HermitianMatrix,
    /// `δ`.
    pub shift: f64,
    /// `Tr λ′`.
    pub upper_bound: f64,
    /// `P_s` of the certified POVM.
    pub success_probability: f64,
    /// `Tr λ′ - P_s`.
    pub gap: f64,
    /// `min eig(λ - ξ_j ρ_j)` before the shift.
    pub helstrom_residuals: Vec<f64>,
    /// `max_j ‖(λ - ξ_j ρ_j) Π_j‖_max`.
    pub slackness_residual: f64,
}

impl Certificate {
    /// True when the gap and both residual families are within `tol`.
    pub fn is_optimal(&self, tol: f64) -> bool {
        self.gap <= tol
            && self.slackness_residual <= tol.max(RESIDUAL_TOLERANCE)
            && self
                .helstrom_residuals
                .iter()
                .all(|&r| r >= -tol.max(RESIDUAL_TOLERANCE))
    }
}

/// The dual witness returned by [`dual_upper_bound`].
#[derive(Debug, Clone)]
pub struct DualBound {
    pub feasible_dual: HermitianMatrix,
    pub shift: f64,
    pub upper_bound: f64,
}

fn check_dim(e: &Ensemble, lambda: &HermitianMatrix) -> Result<()> {
    if lambda.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: lambda.dim(),
        });
    }
    Ok(())
}

/// `min eig(λ - ξ_j ρ_j)` for each source.
pub fn helstrom_residuals(e: &Ensemble, lambda: &HermitianMatrix) -> Result<Vec<f64>> {
    check_dim(e, lambda)?;
    (0..e.len())
        .map(|j| min_eigenvalue(&(lambda - &e.weighted_state(j))))
        .collect()
}

/// `max_j` of the max-abs entry of `(λ - ξ_j ρ_j) Π_j`.
pub fn slackness_residual(e: &Ensemble, m: &Povm, lambda: &HermitianMatrix) -> Result<f64> {
    check_dim(e, lambda)?;
    if m.len() != e.len() {
        return Err(Error::CountMismatch {
            expected: e.len(),
            found: m.len(),
        });
    }
    if m.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: m.dim(),
        });
    }
    let mut worst = 0.0_f64;
    for (j, el) in m.elements().iter().enumerate() {
        let slack = lambda - &e.weighted_state(j);
        let prod = slack.product(el);
        worst = prod.iter().fold(worst, |acc, z| acc.max(z.norm()));
    }
    Ok(worst)
}

/// Shifts `λ` into the dual-feasible set and returns `Tr λ′`.
pub fn dual_upper_bound(e: &Ensemble, lambda: &HermitianMatrix) -> Result<DualBound> {
    let residuals = helstrom_residuals(e, lambda)?;
    Ok(bound_from_residuals(lambda, &residuals))
}

fn bound_from_residuals(lambda: &HermitianMatrix, residuals: &[f64]) -> DualBound {
    let shift = residuals.iter().fold(0.0_f64, |acc, &r| acc.max(-r));
    let feasible_dual = if shift > 0.0 {
        lambda + &HermitianMatrix::identity(lambda.dim()).scale(shift)
    } else {
        lambda.clone()
    };
    let upper_bound = feasible_dual.trace();
    DualBound {
        feasible_dual,
        shift,
        upper_bound,
    }
}

/// Certificate for `m` using a caller-supplied `λ`.
pub fn certify_with_lambda(
    e: &Ensemble,
    m: &Povm,
    lambda: &HermitianMatrix,
) -> Result<Certificate> {
    let helstrom = helstrom_residuals(e, lambda)?;
    let slackness = slackness_residual(e, m, lambda)?;
    let bound = bound_from_residuals(lambda, &helstrom);
    let ps = success_probability(e, m)?;
    Ok(Certificate {
        feasible_dual: bound.feasible_dual,
        shift: bound.shift,
        upper_bound: bound.upper_bound,
        success_probability: ps,
        gap: bound.upper_bound - ps,
        helstrom_residuals: helstrom,
        slackness_residual: slackness,
    })
}

/// Builds `λ` from `m` and certifies `m` against it.
pub fn certify(e: &Ensemble, m: &Povm) -> Result<Certificate> {
    let lambda = lagrange_operator(e, m, DEFAULT_RANK_CUTOFF)?;
    certify_with_lambda(e, m, &lambda)
}
