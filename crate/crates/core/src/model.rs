//! The discrimination game: prior-weighted sources, measurement strategies
//! and the average success probability `P_s = Σ_j ξ_j Tr ρ_j Π_j`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{min_eigenvalue, trace_product, HermitianMatrix};

/// PSD tolerance for density matrices.
pub const STATE_PSD_TOLERANCE: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const STATE_TRACE_TOLERANCE: f64 = 1e-10;
/// Tolerance on `Σ ξ_j = 1`.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-10;
/// PSD tolerance for POVM elements.
pub const POVM_PSD_TOLERANCE: f64 = 1e-9;
/// Max-abs tolerance on `Σ Π_j - I`.
pub const POVM_COMPLETENESS_TOLERANCE: f64 = 1e-9;

/// A quantum state. Positivity and unit trace are checked by
/// [`validate_ensemble`], not on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Self {
        Self(matrix)
    }

    /// `|ψ⟩⟨ψ|` for a ket, normalized.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidInput(
                "ket must be a finite nonzero vector".into(),
            ));
        }
        let scaled: Vec<Complex64> = ket.iter().map(|z| z / norm_sq.sqrt()).collect();
        Ok(Self(HermitianMatrix::outer(&scaled)?))
    }

    /// Qubit state `(I + r·σ)/2` for a Bloch vector `r` with `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        let m = HermitianMatrix::from_rows(&[
            vec![
                Complex64::new(0.5 * (1.0 + z), 0.0),
                Complex64::new(0.5 * x, -0.5 * y),
            ],
            vec![
                Complex64::new(0.5 * x, 0.5 * y),
                Complex64::new(0.5 * (1.0 - z), 0.0),
            ],
        ])?;
        Ok(Self(m))
    }

    /// Bloch vector of a qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let m = &self.0;
        let off = m.get(1, 0);
        Ok([2.0 * off.re, 2.0 * off.im, m.get(0, 0).re - m.get(1, 1).re])
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `M` sources with priors `ξ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    dim: usize,
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
}

impl Ensemble {
    /// Structural checks only (non-empty, matching counts and dimensions);
    /// numeric invariants are reported by [`validate_ensemble`].
    pub fn new(states: Vec<DensityMatrix>, priors: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidInput(
                "an ensemble needs at least one state".into(),
            ));
        }
        if priors.len() != states.len() {
            return Err(Error::CountMismatch {
                expected: states.len(),
                found: priors.len(),
            });
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            dim,
            states,
            priors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// `ξ_j ρ_j`.
    pub fn weighted_state(&self, j: usize) -> HermitianMatrix {
        self.states[j].matrix().scale(self.priors[j])
    }
}

/// An `M`-outcome measurement `{Π_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    /// Structural checks only; see [`validate_povm`].
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidInput(
                "a POVM needs at least one element".into(),
            ));
        }
        let dim = elements[0].dim();
        if let Some(bad) = elements.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<HermitianMatrix> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// `Σ_j Π_j`.
    pub fn sum(&self) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.dim());
        for e in &self.elements {
            acc = &acc + e;
        }
        acc
    }

    /// Max-abs entry of `Σ_j Π_j - I`.
    pub fn completeness_deviation(&self) -> f64 {
        self.sum()
            .max_abs_diff(&HermitianMatrix::identity(self.dim()))
    }

    /// `Tr Π_j` for each element.
    pub fn weights(&self) -> Vec<f64> {
        self.elements.iter().map(HermitianMatrix::trace).collect()
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Location in the input, e.g. `priors` or `states[1]`.
    pub path: String,
    pub message: String,
    pub deviation: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: String, deviation: f64) {
        self.violations.push(Violation {
            path: path.into(),
            message,
            deviation,
        });
    }

    /// Turns a non-empty report into an [`Error::InvalidInput`].
    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let joined: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        Err(Error::InvalidInput(joined.join("; ")))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Compact decimal rendering for messages: at most six decimals, trailing
/// zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn validate_ensemble(e: &Ensemble) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (j, &xi) in e.priors.iter().enumerate() {
        if !xi.is_finite() || xi < 0.0 {
            report.push(
                format!("priors[{j}]"),
                format!("negative prior {}", short(xi)),
                -xi,
            );
        }
    }
    let total: f64 = e.priors.iter().sum();
    if !((total - 1.0).abs() <= PRIOR_SUM_TOLERANCE) {
        report.push(
            "priors",
            format!("priors sum {}", short(total)),
            (total - 1.0).abs(),
        );
    }
    for (j, state) in e.states.iter().enumerate() {
        let m = state.matrix();
        let dev = (m.trace() - 1.0).abs();
        if dev > STATE_TRACE_TOLERANCE {
            report.push(
                format!("states[{j}]"),
                format!("trace deviation {}", short(dev)),
                dev,
            );
        }
        match min_eigenvalue(m) {
            Ok(w) if w < -STATE_PSD_TOLERANCE => report.push(
                format!("states[{j}]"),
                format!("min eigenvalue {}", short(w)),
                -w,
            ),
            Ok(_) => {}
            Err(err) => report.push(format!("states[{j}]"), err.to_string(), f64::INFINITY),
        }
    }
    report
}

/// Checks positivity of each element and completeness against `I_dim`.
pub fn validate_povm(m: &Povm, dim: usize) -> ValidationReport {
    let mut report = ValidationReport::default();
    if m.dim() != dim {
        report.push(
            "povm",
            format!("dimension {} does not match {dim}", m.dim()),
            f64::INFINITY,
        );
        return report;
    }
    for (j, el) in m.elements.iter().enumerate() {
        match min_eigenvalue(el) {
            Ok(w) if w < -POVM_PSD_TOLERANCE => report.push(
                format!("povm[{j}]"),
                format!("element {j} min eigenvalue {}", short(w)),
                -w,
            ),
            Ok(_) => {}
            Err(err) => report.push(format!("povm[{j}]"), err.to_string(), f64::INFINITY),
        }
    }
    let dev = m.completeness_deviation();
    if dev > POVM_COMPLETENESS_TOLERANCE {
        report.push(
            "povm",
            format!("completeness deviation {}", short(dev)),
            dev,
        );
    }
    report
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

/// `P_s = Σ_j ξ_j Tr ρ_j Π_j`.
pub fn success_probability(e: &Ensemble, m: &Povm) -> Result<f64> {
    check_pair(e, m)?;
    let mut total = 0.0;
    for j in 0..e.len() {
        total += e.priors[j] * trace_product(e.states[j].matrix(), &m.elements[j])?;
    }
    Ok(total)
}

/// Row `j` holds `P(k|j) = Tr ρ_j Π_k`. Entries in `[-1e-10, 0)` are
/// clamped to zero.
pub fn confusion_matrix(e: &Ensemble, m: &Povm) -> Result<Vec<Vec<f64>>> {
    check_pair(e, m)?;
    e.states
        .iter()
        .map(|state| {
            m.elements
                .iter()
                .map(|el| {
                    let v = trace_product(state.matrix(), el)?;
                    Ok(if (-1e-10..0.0).contains(&v) { 0.0 } else { v })
                })
                .collect()
        })
        .collect()
}
