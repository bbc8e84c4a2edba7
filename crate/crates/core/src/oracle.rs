//! Brute-force oracles and a Monte-Carlo model of the guessing game.
//!
//! The oracles only ever lower-bound the optimum; together with the dual
//! bound from [`crate::certificate`] they sandwich the solver's answer.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, DEFAULT_RANK_CUTOFF};
use crate::model::{success_probability, DensityMatrix, Ensemble, Povm};
use crate::solver::normalize_to_povm;

/// Samples handled by one rng stream in [`random_povm_search`].
const SAMPLE_CHUNK: usize = 1024;

/// Largest tolerated deviation of outcome probabilities from a distribution.
const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_povm: Povm,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameStats {
    pub trials: u64,
    pub successes: u64,
    pub empirical_rate: f64,
    pub std_error: f64,
}

impl GameStats {
    pub fn from_counts(trials: u64, successes: u64) -> Self {
        let rate = successes as f64 / trials as f64;
        Self {
            trials,
            successes,
            empirical_rate: rate,
            std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
        }
    }

    /// `|empirical - expected|` in units of the binomial standard error of
    /// `expected`. Differences at rounding level count as agreement.
    pub fn sigma_distance(&self, expected: f64) -> f64 {
        let diff = (self.empirical_rate - expected).abs();
        if diff <= 1e-12 {
            return 0.0;
        }
        let sigma = (expected * (1.0 - expected) / self.trials as f64).sqrt();
        if sigma == 0.0 {
            f64::INFINITY
        } else {
            diff / sigma
        }
    }
}

/// Larger value wins; ties go to the earlier candidate so parallel
/// reductions stay deterministic.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn trivial(dim: usize, evaluations: usize) -> OracleResult {
    OracleResult {
        best_value: 1.0,
        best_povm: Povm::new(vec![HermitianMatrix::identity(dim)]).expect("one element"),
        evaluations,
    }
}

fn bloch_direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Scans projective qubit measurements `{(I ± n·σ)/2}` with `n` on a
/// `grid_density × grid_density` grid of polar angles `θ_i = iπ/(N-1)` and
/// azimuths `φ_k = 2πk/N`. The two projectors go to the labels in
/// `assignment`, or to every ordered pair of labels when it is `None`;
/// all other labels get zero elements.
pub fn projective_oracle_qubit(
    e: &Ensemble,
    grid_density: usize,
    assignment: Option<(usize, usize)>,
) -> Result<OracleResult> {
    if e.dim() != 2 {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    if grid_density < 2 {
        return Err(Error::InvalidInput(format!(
            "grid density {grid_density} is below 2"
        )));
    }
    let m = e.len();
    if m == 1 {
        return Ok(trivial(2, 1));
    }
    let pairs: Vec<(usize, usize)> = match assignment {
        Some((a, b)) if a == b || a >= m || b >= m => {
            return Err(Error::InvalidInput(format!(
                "assignment ({a}, {b}) must name two distinct labels below {m}"
            )))
        }
        Some(pair) => vec![pair],
        None => (0..m)
            .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect(),
    };
    // Tr ρ (I ± n·σ)/2 = (1 ± r·n)/2, so each candidate costs one dot product.
    let weighted: Vec<[f64; 3]> = e
        .states()
        .iter()
        .zip(e.priors())
        .map(|(s, &xi)| s.bloch_vector().map(|r| r.map(|c| xi * c)))
        .collect::<Result<_>>()?;
    let n = grid_density;
    let per_pair = n * n;
    let best = (0..pairs.len() * n)
        .into_par_iter()
        .map(|row| {
            let (a, b) = pairs[row / n];
            let theta = (row % n) as f64 * std::f64::consts::PI / (n - 1) as f64;
            let base = 0.5 * (e.priors()[a] + e.priors()[b]);
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for k in 0..n {
                let d = bloch_direction(theta, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
                let dot: f64 = (0..3)
                    .map(|c| (weighted[a][c] - weighted[b][c]) * d[c])
                    .sum();
                best = better(best, (base + 0.5 * dot, row * n + k));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), better);

    let idx = best.1;
    let (a, b) = pairs[idx / per_pair];
    let theta = ((idx / n) % n) as f64 * std::f64::consts::PI / (n - 1) as f64;
    let phi = 2.0 * std::f64::consts::PI * (idx % n) as f64 / n as f64;
    let up = DensityMatrix::from_bloch(bloch_direction(theta, phi))?
        .matrix()
        .clone();
    let down = &HermitianMatrix::identity(2) - &up;
    let mut elements = vec![HermitianMatrix::zeros(2); m];
    elements[a] = up;
    elements[b] = down;
    let best_povm = Povm::new(elements)?;
    Ok(OracleResult {
        best_value: success_probability(e, &best_povm)?,
        best_povm,
        evaluations: pairs.len() * per_pair,
    })
}

/// `G G†` for a Gaussian complex `dim × rank` matrix `G`.
fn random_gram(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> HermitianMatrix {
    let g = DMatrix::from_fn(dim, rank, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    HermitianMatrix::new(&g * g.adjoint()).expect("gram matrices are square and finite")
}

/// A random `count`-element POVM. Element ranks are drawn from `1..=dim`
/// so that low-rank (and in particular projective) measurements are
/// reachable.
pub fn random_povm(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Result<Povm> {
    if count == 0 || dim == 0 {
        return Err(Error::InvalidInput(
            "need at least one element of dimension at least one".into(),
        ));
    }
    let mut ranks: Vec<usize> = (0..count).map(|_| rng.random_range(1..=dim)).collect();
    if ranks.iter().sum::<usize>() < dim {
        ranks[count - 1] = dim;
    }
    let elements = ranks.iter().map(|&r| random_gram(rng, dim, r)).collect();
    normalize_to_povm(elements, DEFAULT_RANK_CUTOFF)
}

/// Best of `samples` random POVMs. Chunk `c` of the samples draws from
/// stream `c` of a ChaCha8 generator seeded with `seed`, so the result does
/// not depend on the thread count.
pub fn random_povm_search(e: &Ensemble, samples: usize, seed: u64) -> Result<OracleResult> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    if e.len() == 1 {
        return Ok(trivial(e.dim(), samples));
    }
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let winners = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, usize, Povm)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let start = c * SAMPLE_CHUNK;
            let end = samples.min(start + SAMPLE_CHUNK);
            let mut best: Option<(f64, usize, Povm)> = None;
            for i in start..end {
                let povm = random_povm(&mut rng, e.len(), e.dim())?;
                let value = success_probability(e, &povm)?;
                if best.as_ref().is_none_or(|b| value > b.0) {
                    best = Some((value, i, povm));
                }
            }
            Ok(best.expect("chunks are non-empty"))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best_value, _, best_povm) = winners
        .into_iter()
        .reduce(|a, b| {
            if better((a.0, a.1), (b.0, b.1)) == (b.0, b.1) {
                b
            } else {
                a
            }
        })
        .expect("at least one chunk");
    Ok(OracleResult {
        best_value,
        best_povm,
        evaluations: samples,
    })
}

/// Inverse-CDF sampler over outcome probabilities `Tr ρ Π_k`.
#[derive(Debug, Clone)]
struct OutcomeTable {
    cumulative: Vec<f64>,
}

impl OutcomeTable {
    fn new(state: &DensityMatrix, m: &Povm) -> Result<Self> {
        if state.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                found: m.dim(),
            });
        }
        let probs = m
            .elements()
            .iter()
            .map(|el| crate::hermitian::trace_product(state.matrix(), el))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_weights(&probs)
    }

    fn from_weights(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if !total.is_finite() || (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::InvalidDistribution { total });
        }
        let clamped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
        let norm: f64 = clamped.iter().sum();
        let mut acc = 0.0;
        let cumulative = clamped
            .iter()
            .map(|p| {
                acc += p / norm;
                acc
            })
            .collect();
        Ok(Self { cumulative })
    }

    /// The last bucket absorbs whatever rounding leaves above the final
    /// cumulative value.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let last = self.cumulative.len() - 1;
        self.cumulative[..last]
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last)
    }
}

/// Draws an outcome index with probability `Tr ρ Π_k`.
pub fn sample_measurement<R: Rng + ?Sized>(
    state: &DensityMatrix,
    m: &Povm,
    rng: &mut R,
) -> Result<usize> {
    Ok(OutcomeTable::new(state, m)?.draw(rng))
}

/// Plays the game `trials` times: a source is drawn from the priors, its
/// state is measured, and the round counts as a success when the outcome
/// names the source.
pub fn simulate_game(e: &Ensemble, m: &Povm, trials: u64, seed: u64) -> Result<GameStats> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if m.len() != e.len() {
        return Err(Error::CountMismatch {
            expected: e.len(),
            found: m.len(),
        });
    }
    let sources = OutcomeTable::from_weights(e.priors())?;
    let outcomes = e
        .states()
        .iter()
        .map(|s| OutcomeTable::new(s, m))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0;
    for _ in 0..trials {
        let j = sources.draw(&mut rng);
        if outcomes[j].draw(&mut rng) == j {
            successes += 1;
        }
    }
    Ok(GameStats::from_counts(trials, successes))
}
