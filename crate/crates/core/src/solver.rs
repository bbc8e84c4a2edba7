//! Fixed-point iteration for the minimum-error POVM.
//!
//! Varying `P_s - Tr(λ Σ_j Π_j)` with `Π_j = A_j† A_j` gives the extremal
//! equations `ξ_j ρ_j Π_j = λ Π_j`. Rewritten in manifestly positive form,
//!
//! ```text
//! Π_j ← ξ_j² λ⁻¹ ρ_j Π_j ρ_j λ⁻¹,      λ = (Σ_j ξ_j² ρ_j Π_j ρ_j)^{1/2},
//! ```
//!
//! the update keeps every element PSD and, since `Σ_j Π_j′ = λ⁻¹ λ² λ⁻¹`,
//! keeps the POVM complete whenever `λ` has full rank. `λ⁻¹` is the
//! pseudo-inverse; when `λ` is singular the update loses the kernel of `λ`,
//! and that deficit is handed to the element that gains most from it.
//!
//! Iteration stops on the certified duality gap rather than on step size,
//! since a stationary point of the update need not be optimal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::certificate::{certify_with_lambda, Certificate};
use crate::error::{Error, Result};
use crate::hermitian::{
    eig_hermitian, inv_sqrt_psd, min_eigenvalue, pinv_psd, sqrt_psd, trace_product,
    HermitianMatrix, DEFAULT_RANK_CUTOFF,
};
use crate::model::{success_probability, validate_ensemble, Ensemble, Povm};

/// A kernel deficit smaller than this (max-abs) is rounding noise.
const DEFICIT_FLOOR: f64 = 1e-12;

/// Starting point of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `Π_j = I/M`.
    Uniform,
    /// `I/M` plus a seeded random Hermitian perturbation, renormalized.
    RandomJitter { seed: u64, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub rank_cutoff: f64,
    pub init_mode: InitMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            gap_tolerance: 1e-8,
            rank_cutoff: DEFAULT_RANK_CUTOFF,
            init_mode: InitMode::Uniform,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidInput(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.gap_tolerance > 0.0) {
            return Err(Error::InvalidInput("gap_tolerance must be positive".into()));
        }
        if !(self.rank_cutoff > 0.0) {
            return Err(Error::InvalidInput("rank_cutoff must be positive".into()));
        }
        if let InitMode::RandomJitter { amplitude, .. } = self.init_mode {
            if !(amplitude >= 0.0) || !amplitude.is_finite() {
                return Err(Error::InvalidInput(
                    "jitter amplitude must be finite and non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub povm: Povm,
    pub success_probability: f64,
    pub lagrange_operator: HermitianMatrix,
    pub iterations_used: usize,
    pub gap: f64,
    /// `P_s` after each update.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Updates after which `P_s` dropped by more than rounding.
    pub monotonicity_violations: usize,
    pub certificate: Certificate,
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    HermitianMatrix::symmetrized(raw)
}

/// Rescales elements by `S^{-1/2} (·) S^{-1/2}` with `S = Σ A_j`.
pub(crate) fn normalize_to_povm(elements: Vec<HermitianMatrix>, rank_cutoff: f64) -> Result<Povm> {
    let dim = elements[0].dim();
    let mut sum = HermitianMatrix::zeros(dim);
    for el in &elements {
        sum = &sum + el;
    }
    let root = inv_sqrt_psd(&sum, rank_cutoff)?;
    Povm::new(elements.iter().map(|el| el.conjugate_by(&root)).collect())
}

/// The unbiased starting POVM `I/M`, optionally perturbed.
pub fn default_initial_povm(count: usize, dim: usize, mode: &InitMode) -> Result<Povm> {
    if count == 0 || dim == 0 {
        return Err(Error::InvalidInput(
            "need at least one element of dimension at least one".into(),
        ));
    }
    let base = HermitianMatrix::identity(dim).scale(1.0 / count as f64);
    match *mode {
        InitMode::Uniform => Povm::new(vec![base; count]),
        InitMode::RandomJitter { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let perturbed: Vec<HermitianMatrix> = (0..count)
                .map(|_| &base + &random_hermitian(&mut rng, dim).scale(amplitude))
                .collect();
            for el in &perturbed {
                let w = min_eigenvalue(el)?;
                if w <= 0.0 {
                    return Err(Error::InvalidJitter {
                        amplitude,
                        min_eigenvalue: w,
                    });
                }
            }
            normalize_to_povm(perturbed, DEFAULT_RANK_CUTOFF)
        }
    }
}

fn check_pair(e: &Ensemble, m: &Povm) -> Result<()> {
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
    Ok(())
}

/// `λ = (Σ_j ξ_j² ρ_j Π_j ρ_j)^{1/2}`.
pub fn lagrange_operator(e: &Ensemble, m: &Povm, rank_cutoff: f64) -> Result<HermitianMatrix> {
    check_pair(e, m)?;
    let mut acc = HermitianMatrix::zeros(e.dim());
    for (j, el) in m.elements().iter().enumerate() {
        acc = &acc + &el.conjugate_by(&e.weighted_state(j));
    }
    sqrt_psd(&acc, rank_cutoff)
}

/// One update with a precomputed `λ`.
///
/// The update is evaluated as `B B†` with `B = ξ_j λ⁻¹ ρ_j Π_j^{1/2}`. The
/// plain sandwich `λ⁻¹ ρ Π ρ λ⁻¹` preserves the inertia of `Π`, so a
/// rounding-level negative eigenvalue would be amplified by the condition
/// number of `λ` on every step; the factored form clips it instead.
fn update(e: &Ensemble, m: &Povm, lambda: &HermitianMatrix, rank_cutoff: f64) -> Result<Povm> {
    let inv = pinv_psd(lambda, rank_cutoff)?;
    let dim = e.dim();
    let mut next: Vec<HermitianMatrix> = m
        .elements()
        .iter()
        .enumerate()
        .map(|(j, el)| {
            let root = eig_hermitian(el)?.map_spectrum(|w| w.max(0.0).sqrt());
            let b = inv.product(&e.weighted_state(j)) * root.as_matrix();
            Ok(HermitianMatrix::symmetrized(&b * b.adjoint()))
        })
        .collect::<Result<_>>()?;

    let mut sum = HermitianMatrix::zeros(dim);
    for el in &next {
        sum = &sum + el;
    }
    let deficit = &HermitianMatrix::identity(dim) - &sum;
    if deficit.max_abs() > DEFICIT_FLOOR {
        let mut best = 0;
        let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for j in 0..e.len() {
            let gain = e.priors()[j] * trace_product(e.states()[j].matrix(), &deficit)?;
            let key = (gain, e.priors()[j]);
            if key.0 > best_key.0 + 1e-15
                || ((key.0 - best_key.0).abs() <= 1e-15 && key.1 > best_key.1)
            {
                best = j;
                best_key = key;
            }
        }
        next[best] = &next[best] + &deficit;
    }
    Povm::new(next)
}

/// `Π_j ← ξ_j² λ⁻¹ ρ_j Π_j ρ_j λ⁻¹` with `λ` from [`lagrange_operator`].
pub fn iterate_once(e: &Ensemble, m: &Povm, cfg: &SolverConfig) -> Result<Povm> {
    let lambda = lagrange_operator(e, m, cfg.rank_cutoff)?;
    update(e, m, &lambda, cfg.rank_cutoff)
}

/// Runs the iteration from the configured starting point.
pub fn solve(e: &Ensemble, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let initial = default_initial_povm(e.len(), e.dim(), &cfg.init_mode)?;
    solve_from(e, initial, cfg)
}

/// Runs the iteration from a caller-supplied POVM until the certified gap
/// drops to `gap_tolerance` or the iteration budget is spent.
pub fn solve_from(e: &Ensemble, initial: Povm, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    validate_ensemble(e).into_result()?;
    check_pair(e, &initial)?;

    let mut povm = initial;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut monotonicity_violations = 0;
    let mut last_ps = success_probability(e, &povm)?;
    loop {
        let lambda = lagrange_operator(e, &povm, cfg.rank_cutoff)?;
        let certificate = certify_with_lambda(e, &povm, &lambda)?;
        let converged = certificate.gap <= cfg.gap_tolerance;
        if converged || iterations >= cfg.max_iterations {
            if !converged {
                log::info!(
                    "no certified convergence after {iterations} iterations (gap {:e})",
                    certificate.gap
                );
            }
            return Ok(SolveReport {
                success_probability: certificate.success_probability,
                gap: certificate.gap,
                povm,
                lagrange_operator: lambda,
                iterations_used: iterations,
                trace,
                converged,
                monotonicity_violations,
                certificate,
            });
        }
        povm = update(e, &povm, &lambda, cfg.rank_cutoff)?;
        iterations += 1;
        let ps = success_probability(e, &povm)?;
        if ps < last_ps - 1e-12 {
            monotonicity_violations += 1;
            log::debug!("P_s decreased at iteration {iterations}: {last_ps} -> {ps}");
        }
        last_ps = ps;
        trace.push(ps);
    }
}
