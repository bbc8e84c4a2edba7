#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsd_core::hermitian::{eig_hermitian, HermitianMatrix};
use qsd_core::model::{DensityMatrix, Ensemble};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `(1 + 1/√2)/2`, the two-state optimum for |0⟩, |+⟩ with equal priors.
pub const HELSTROM_ZERO_PLUS: f64 = 0.853_553_390_593_273_8;

pub fn bloch(r: [f64; 3]) -> DensityMatrix {
    DensityMatrix::from_bloch(r).unwrap()
}

pub fn orthogonal() -> Ensemble {
    Ensemble::new(
        vec![bloch([0.0, 0.0, 1.0]), bloch([0.0, 0.0, -1.0])],
        vec![0.5, 0.5],
    )
    .unwrap()
}

pub fn zero_plus() -> Ensemble {
    Ensemble::new(
        vec![bloch([0.0, 0.0, 1.0]), bloch([1.0, 0.0, 0.0])],
        vec![0.5, 0.5],
    )
    .unwrap()
}

/// Three pure states 120° apart on a great circle of the Bloch sphere.
pub fn trine() -> Ensemble {
    let s = 3f64.sqrt() / 2.0;
    Ensemble::new(
        vec![
            bloch([0.0, 0.0, 1.0]),
            bloch([s, 0.0, -0.5]),
            bloch([-s, 0.0, -0.5]),
        ],
        vec![1.0 / 3.0; 3],
    )
    .unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, p: usize) -> HermitianMatrix {
    HermitianMatrix::new(DMatrix::from_fn(p, p, |_, _| gaussian(rng))).unwrap()
}

/// `G G†` with `G` a Gaussian `p × rank` matrix.
pub fn random_psd(rng: &mut ChaCha8Rng, p: usize, rank: usize) -> HermitianMatrix {
    let g = DMatrix::from_fn(p, rank, |_, _| gaussian(rng));
    HermitianMatrix::new(&g * g.adjoint()).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, p: usize) -> DensityMatrix {
    let rank = rng.random_range(1..=p);
    let a = random_psd(rng, p, rank);
    DensityMatrix::new(a.scale(1.0 / a.trace()))
}

pub fn random_priors(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_ensemble(rng: &mut ChaCha8Rng, m: usize, p: usize) -> Ensemble {
    let states = (0..m).map(|_| random_state(rng, p)).collect();
    Ensemble::new(states, random_priors(rng, m)).unwrap()
}

pub fn trace_norm(a: &HermitianMatrix) -> f64 {
    eig_hermitian(a)
        .unwrap()
        .eigenvalues
        .iter()
        .map(|w| w.abs())
        .sum()
}

/// Optimal two-state success probability `(1 + ‖ξ_1ρ_1 - ξ_2ρ_2‖_1)/2`.
pub fn helstrom_two_state(e: &Ensemble) -> f64 {
    assert_eq!(e.len(), 2);
    0.5 * (1.0 + trace_norm(&(&e.weighted_state(0) - &e.weighted_state(1))))
}

/// Operator norm of a matrix: the largest singular value.
pub fn operator_norm(a: &DMatrix<Complex64>) -> f64 {
    a.clone().singular_values().max()
}
