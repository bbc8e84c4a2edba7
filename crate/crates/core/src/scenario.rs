//! Three coplanar qubit states with a tunable prior.
//!
//! `|Ψ_{1,2}⟩ = cos φ |0⟩ ± sin φ |1⟩` (Bloch vectors `(±sin 2φ, 0, cos 2φ)`)
//! share the prior `ξ/2` each, and `|Ψ_3⟩ = (|0⟩ + |1⟩)/√2` (Bloch `+x`)
//! carries `1 - ξ`. As `ξ` grows the optimal measurement passes through
//! three regimes:
//!
//! - region I: two outcomes, `Ψ_3` against one member of the pair;
//! - region II: three outcomes;
//! - region III: two outcomes, Helstrom discrimination of `Ψ_1` against `Ψ_2`.
//!
//! The II/III boundary has the closed form `1/(1 + sin φ cos φ)`; the I/II
//! boundary is located numerically.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::model::{DensityMatrix, Ensemble, Povm};
use crate::solver::{solve, SolverConfig};

/// `Tr Π_j` above this counts as an active outcome.
pub const DEFAULT_WEIGHT_THRESHOLD: f64 = 1e-6;
/// Sweep points with a larger certified gap are flagged.
pub const SWEEP_GAP_TOLERANCE: f64 = 1e-7;
/// Width of the final bisection bracket.
pub const BISECTION_TOLERANCE: f64 = 1e-5;
/// `|P_s - final|` used to count how quickly a sweep point settles.
pub const SETTLE_TOLERANCE: f64 = 1e-3;

/// Solver settings for scenario work. The gap tolerance is tighter than
/// the library default because element weights, not just `P_s`, must be
/// resolved: a vanishing element keeps a weight of roughly `gap / slack`.
pub fn scenario_config() -> SolverConfig {
    SolverConfig {
        gap_tolerance: 1e-12,
        max_iterations: 200_000,
        ..SolverConfig::default()
    }
}

/// Index of `Ψ_3` in the ensemble.
const THIRD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoplanarScenario {
    pub phi: f64,
    pub xi: f64,
}

impl CoplanarScenario {
    /// `0 < φ ≤ π/4` (the upper end is the degenerate case `Ψ_1 = Ψ_3`) and
    /// `0 ≤ ξ ≤ 1`.
    pub fn new(phi: f64, xi: f64) -> Result<Self> {
        check_phi(phi)?;
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::InvalidInput(format!("xi = {xi} is outside [0, 1]")));
        }
        Ok(Self { phi, xi })
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi <= FRAC_PI_4) {
        return Err(Error::InvalidInput(format!(
            "phi = {phi} is outside (0, pi/4]"
        )));
    }
    Ok(())
}

/// Builds the three-state ensemble `{ξ/2, ξ/2, 1 - ξ}`.
pub fn coplanar_three_states(s: &CoplanarScenario) -> Result<Ensemble> {
    let (sin, cos) = s.phi.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let states = vec![
        DensityMatrix::pure(&[Complex64::new(cos, 0.0), Complex64::new(sin, 0.0)])?,
        DensityMatrix::pure(&[Complex64::new(cos, 0.0), Complex64::new(-sin, 0.0)])?,
        DensityMatrix::pure(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)])?,
    ];
    Ensemble::new(states, vec![0.5 * s.xi, 0.5 * s.xi, 1.0 - s.xi])
}

/// Prior at which `Ψ_3` drops out of the optimal measurement:
/// `1/(1 + sin φ cos φ)`.
pub fn threshold_xi_23(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(1.0 / (1.0 + phi.sin() * phi.cos()))
}

/// Error rate of the Helstrom measurement on the pair alone, valid above
/// the II/III threshold: `1 - ξ(1 + sin 2φ)/2`.
pub fn region_three_error(phi: f64, xi: f64) -> f64 {
    1.0 - 0.5 * xi * (1.0 + (2.0 * phi).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    I,
    II,
    III,
    /// A single active outcome (`ξ = 0`).
    Degenerate,
    /// Classification failed (ambiguous weights or a failed solve).
    Unresolved,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::Degenerate => "degenerate",
            Region::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

/// Neighbouring regions whose boundary can be bisected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionPair {
    OneTwo,
    TwoThree,
}

impl RegionPair {
    fn regions(self) -> (Region, Region) {
        match self {
            RegionPair::OneTwo => (Region::I, Region::II),
            RegionPair::TwoThree => (Region::II, Region::III),
        }
    }
}

impl fmt::Display for RegionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.regions();
        write!(f, "{a}/{b}")
    }
}

/// Region from the number of active outcomes and which outcome vanished.
pub fn classify_region(povm: &Povm, e: &Ensemble, weight_threshold: f64) -> Result<Region> {
    if povm.len() != 3 || e.len() != 3 {
        return Err(Error::CountMismatch {
            expected: 3,
            found: povm.len(),
        });
    }
    let weights = povm.weights();
    let near: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| (w - weight_threshold).abs() < weight_threshold)
        .map(|(j, _)| j)
        .collect();
    if near.len() >= 2 {
        return Err(Error::AmbiguousClassification {
            first: near[0],
            second: near[1],
        });
    }
    let active: Vec<bool> = weights.iter().map(|&w| w > weight_threshold).collect();
    let count = active.iter().filter(|&&a| a).count();
    Ok(match count {
        3 => Region::II,
        2 if !active[THIRD] => Region::III,
        2 => Region::I,
        _ => Region::Degenerate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub xi: f64,
    pub phi: f64,
    pub error_rate: f64,
    pub outcome_count: usize,
    pub region: Region,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// First iteration from which `P_s` stays within [`SETTLE_TOLERANCE`] of
    /// its final value.
    pub settle_iterations: usize,
    /// Set when the point failed to solve or certify.
    pub failure: Option<String>,
}

impl SweepPoint {
    pub fn is_flagged(&self) -> bool {
        self.failure.is_some() || !self.converged || self.gap > SWEEP_GAP_TOLERANCE
    }
}

/// Solved and classified scenario instance.
#[derive(Debug, Clone)]
pub struct ScenarioSolution {
    pub ensemble: Ensemble,
    pub povm: Povm,
    pub certificate: Certificate,
    pub point: SweepPoint,
}

fn settle_index(trace: &[f64], final_value: f64) -> usize {
    trace
        .iter()
        .rposition(|&ps| (ps - final_value).abs() > SETTLE_TOLERANCE)
        .map_or(0, |k| k + 1)
}

/// Solves, certifies and classifies a single prior.
pub fn solve_point(phi: f64, xi: f64, cfg: &SolverConfig) -> Result<ScenarioSolution> {
    let s = CoplanarScenario::new(phi, xi)?;
    let e = coplanar_three_states(&s)?;
    let report = solve(&e, cfg)?;
    let weights = report.povm.weights();
    let outcome_count = weights
        .iter()
        .filter(|&&w| w > DEFAULT_WEIGHT_THRESHOLD)
        .count();
    let (region, failure) = match classify_region(&report.povm, &e, DEFAULT_WEIGHT_THRESHOLD) {
        Ok(r) => (r, None),
        Err(err) => (Region::Unresolved, Some(err.to_string())),
    };
    let failure = failure
        .or_else(|| (!report.converged).then(|| format!("not converged (gap {:e})", report.gap)));
    let point = SweepPoint {
        xi,
        phi,
        error_rate: (1.0 - report.success_probability).clamp(0.0, 1.0),
        outcome_count,
        region,
        gap: report.gap,
        iterations: report.iterations_used,
        converged: report.converged,
        settle_iterations: settle_index(&report.trace, report.success_probability),
        failure,
    };
    Ok(ScenarioSolution {
        ensemble: e,
        povm: report.povm,
        certificate: report.certificate,
        point,
    })
}

/// `n` evenly spaced priors covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Solves every prior in `xi_grid` (in parallel, order preserved). A point
/// that fails is recorded with [`SweepPoint::failure`] set.
pub fn sweep_xi(phi: f64, xi_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepPoint>> {
    check_phi(phi)?;
    if let Some(bad) = xi_grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidInput(format!(
            "grid value {bad} is outside [0, 1]"
        )));
    }
    Ok(xi_grid
        .par_iter()
        .map(|&xi| match solve_point(phi, xi, cfg) {
            Ok(sol) => sol.point,
            Err(err) => SweepPoint {
                xi,
                phi,
                error_rate: f64::NAN,
                outcome_count: 0,
                region: Region::Unresolved,
                gap: f64::NAN,
                iterations: 0,
                converged: false,
                settle_iterations: 0,
                failure: Some(err.to_string()),
            },
        })
        .collect())
}

/// Region of the final iterate. Unconverged solves still classify: they
/// only occur within a hair of a boundary, where either answer is inside
/// the bisection tolerance.
fn region_at(phi: f64, xi: f64, cfg: &SolverConfig) -> Result<Region> {
    let sol = solve_point(phi, xi, cfg)?;
    if sol.point.region == Region::Unresolved {
        return Err(Error::InvalidInput(format!(
            "xi = {xi}: {}",
            sol.point.failure.unwrap_or_default()
        )));
    }
    if !sol.point.converged {
        log::debug!(
            "xi = {xi}: classified without certified convergence (gap {:e})",
            sol.point.gap
        );
    }
    Ok(sol.point.region)
}

/// Position of a region along increasing `ξ`; `None` for the degenerate
/// and unresolved cases.
fn region_rank(region: Region) -> Option<u8> {
    match region {
        Region::I => Some(1),
        Region::II => Some(2),
        Region::III => Some(3),
        Region::Degenerate | Region::Unresolved => None,
    }
}

/// Locates the boundary between the two regions of `pair` by bisection on
/// the prior, to [`BISECTION_TOLERANCE`].
///
/// Regions follow I, II, III along increasing `ξ`, so the search bisects
/// the predicate "region is at or past the upper region of the pair". This
/// still converges when region II is too narrow for the coarse scan to
/// see. [`Error::BracketingFailure`] is returned when the scan never
/// crosses the boundary.
pub fn find_threshold_numeric(phi: f64, pair: RegionPair, cfg: &SolverConfig) -> Result<f64> {
    check_phi(phi)?;
    let (_, high_region) = pair.regions();
    let high_rank = region_rank(high_region).expect("pairs name ordered regions");
    let past = |region: Region| -> Option<bool> { region_rank(region).map(|r| r >= high_rank) };

    // The endpoints are degenerate; scan the interior.
    let scan: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let flags: Vec<Option<bool>> = scan
        .par_iter()
        .map(|&xi| region_at(phi, xi, cfg).ok().and_then(past))
        .collect();
    let bracket = scan
        .windows(2)
        .zip(flags.windows(2))
        .find(|(_, f)| f[0] == Some(false) && f[1] == Some(true))
        .map(|(x, _)| (x[0], x[1]));
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::BracketingFailure(pair.to_string()))?;
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let region = region_at(phi, mid, cfg)?;
        match past(region) {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => {
                return Err(Error::BracketingFailure(format!(
                    "{pair}: region {region} at xi = {mid} inside the bracket"
                )))
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `%.{digits}g`-style rendering: `digits` significant digits, trailing
/// zeros removed, exponent form only for very large or small magnitudes.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        return format!("{mantissa}e{exponent}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "xi,phi,error_rate,outcome_count,region,gap,iterations";

/// Writes the sweep as CSV with 12 significant digits and LF line endings.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_significant(p.xi, 12),
            format_significant(p.phi, 12),
            format_significant(p.error_rate, 12),
            p.outcome_count,
            p.region,
            format_significant(p.gap, 12),
            p.iterations
        )?;
    }
    Ok(())
}
