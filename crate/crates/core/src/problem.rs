//! JSON problem files.
//!
//! ```json
//! { "dim": 2,
//!   "states": [ { "prior": 0.5, "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]] }, ... ],
//!   "povm": [ [[[1,0],[0,0]],[[0,0],[0,0]]], ... ] }
//! ```
//!
//! Matrices are row-major with each entry an `[re, im]` pair. The optional
//! `povm` array is only read by certification. Unlike
//! [`HermitianMatrix::new`], the parser refuses input whose Hermitian defect
//! exceeds [`PARSE_HERMITICITY_TOLERANCE`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::model::{DensityMatrix, Ensemble, Povm};

pub const PARSE_HERMITICITY_TOLERANCE: f64 = 1e-8;

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub prior: f64,
    pub matrix: RawMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<Vec<RawMatrix>>,
}

/// A parsed problem: the ensemble and, if present, a candidate POVM.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ensemble: Ensemble,
    pub povm: Option<Povm>,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        message: message.into(),
    }
}

fn matrix_at(raw: &RawMatrix, dim: usize, path: &str) -> Result<HermitianMatrix> {
    if raw.len() != dim {
        return Err(parse_err(
            path,
            format!("expected {dim} rows, found {}", raw.len()),
        ));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            return Err(parse_err(
                format!("{path}[{i}]"),
                format!("expected {dim} entries, found {}", row.len()),
            ));
        }
    }
    let m = HermitianMatrix::from_pairs(raw).map_err(|e| parse_err(path, e.to_string()))?;
    if m.asymmetry() > PARSE_HERMITICITY_TOLERANCE {
        return Err(parse_err(
            path,
            format!("matrix is not Hermitian (deviation {:e})", m.asymmetry()),
        ));
    }
    Ok(m)
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err("$", e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_ensemble(e: &Ensemble, povm: Option<&Povm>) -> Self {
        Self {
            dim: e.dim(),
            states: e
                .states()
                .iter()
                .zip(e.priors())
                .map(|(s, &prior)| StateEntry {
                    prior,
                    matrix: s.matrix().to_pairs(),
                })
                .collect(),
            povm: povm.map(|m| m.elements().iter().map(HermitianMatrix::to_pairs).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Shape and hermiticity checks, then conversion to model types.
    /// Numeric invariants (trace, positivity, prior sum) are left to the
    /// validators.
    pub fn into_problem(self) -> Result<Problem> {
        if self.dim == 0 {
            return Err(parse_err("dim", "dimension must be at least 1"));
        }
        if self.states.is_empty() {
            return Err(parse_err("states", "at least one state is required"));
        }
        let mut states = Vec::with_capacity(self.states.len());
        let mut priors = Vec::with_capacity(self.states.len());
        for (j, entry) in self.states.iter().enumerate() {
            if !entry.prior.is_finite() {
                return Err(parse_err(
                    format!("states[{j}].prior"),
                    "prior must be finite",
                ));
            }
            let m = matrix_at(&entry.matrix, self.dim, &format!("states[{j}].matrix"))?;
            states.push(DensityMatrix::new(m));
            priors.push(entry.prior);
        }
        let ensemble = Ensemble::new(states, priors)?;
        let povm = match &self.povm {
            None => None,
            Some(raw) => {
                if raw.len() != ensemble.len() {
                    return Err(parse_err(
                        "povm",
                        format!("expected {} elements, found {}", ensemble.len(), raw.len()),
                    ));
                }
                let elements = raw
                    .iter()
                    .enumerate()
                    .map(|(k, r)| matrix_at(r, self.dim, &format!("povm[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                Some(Povm::new(elements)?)
            }
        };
        Ok(Problem { ensemble, povm })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PovmFile {
    Bare(Vec<RawMatrix>),
    Wrapped { povm: Vec<RawMatrix> },
}

/// Parses a standalone POVM: either a bare array of matrices or any object
/// with a `povm` array (such as the output of `qsd solve`).
pub fn povm_from_json(text: &str, dim: usize, count: usize) -> Result<Povm> {
    let raw = match serde_json::from_str(text).map_err(|e| parse_err("$", e.to_string()))? {
        PovmFile::Bare(raw) | PovmFile::Wrapped { povm: raw } => raw,
    };
    if raw.len() != count {
        return Err(parse_err(
            "povm",
            format!("expected {count} elements, found {}", raw.len()),
        ));
    }
    let elements = raw
        .iter()
        .enumerate()
        .map(|(k, r)| matrix_at(r, dim, &format!("povm[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

/// Reads and converts a problem file in one step.
pub fn load_problem(path: &Path) -> Result<Problem> {
    ProblemFile::read(path)?.into_problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standalone_povm_forms() {
        let bare = "[[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]";
        let m = povm_from_json(bare, 2, 2).unwrap();
        assert_eq!(m.completeness_deviation(), 0.0);
        let wrapped = format!(r#"{{"success_probability": 1.0, "povm": {bare}}}"#);
        assert_eq!(povm_from_json(&wrapped, 2, 2).unwrap(), m);
        match povm_from_json(bare, 2, 3) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "povm"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(povm_from_json("{}", 2, 2).is_err());
    }

    const ORTHOGONAL: &str = r#"{
        "dim": 2,
        "states": [
            { "prior": 0.5, "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]] },
            { "prior": 0.5, "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]] }
        ]
    }"#;

    #[test]
    fn parses_orthogonal_pair() {
        let p = ProblemFile::from_json(ORTHOGONAL)
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p.ensemble.len(), 2);
        assert_eq!(p.ensemble.dim(), 2);
        assert!(p.povm.is_none());
    }

    #[test]
    fn rejects_non_hermitian_with_path() {
        let text = r#"{ "dim": 2, "states": [
            { "prior": 1.0, "matrix": [[[0.5,0],[0.5,0]],[[0,0],[0.5,0]]] } ] }"#;
        let err = ProblemFile::from_json(text)
            .unwrap()
            .into_problem()
            .unwrap_err();
        match err {
            Error::Parse { path, .. } => assert_eq!(path, "states[0].matrix"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tolerates_tiny_asymmetry() {
        let text = r#"{ "dim": 2, "states": [
            { "prior": 1.0, "matrix": [[[0.5,0],[0.5,1e-10]],[[0.5,0],[0.5,0]]] } ] }"#;
        assert!(ProblemFile::from_json(text).unwrap().into_problem().is_ok());
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = r#"{ "dim": 2, "states": [
            { "prior": 1.0, "matrix": [[[1,0]],[[0,0],[0,0]]] } ] }"#;
        let err = ProblemFile::from_json(text)
            .unwrap()
            .into_problem()
            .unwrap_err();
        assert!(matches!(err, Error::Parse { path, .. } if path == "states[0].matrix[0]"));
    }

    #[test]
    fn povm_count_must_match() {
        let text = r#"{ "dim": 1, "states": [ { "prior": 1.0, "matrix": [[[1,0]]] } ],
            "povm": [ [[[1,0]]], [[[0,0]]] ] }"#;
        let err = ProblemFile::from_json(text)
            .unwrap()
            .into_problem()
            .unwrap_err();
        assert!(matches!(err, Error::Parse { path, .. } if path == "povm"));
    }

    #[test]
    fn round_trips_through_json() {
        let p = ProblemFile::from_json(ORTHOGONAL)
            .unwrap()
            .into_problem()
            .unwrap();
        let text = ProblemFile::from_ensemble(&p.ensemble, None).to_json();
        let q = ProblemFile::from_json(&text)
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p.ensemble, q.ensemble);
    }
}
