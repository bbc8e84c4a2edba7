//! Dense complex-Hermitian linear algebra at small dimension.
//!
//! Every operator in the crate (density matrices, POVM elements, Lagrange
//! operators, SDP blocks) is carried by [`HermitianMatrix`]. The constructor
//! symmetrizes its input as `(A + A†)/2` and remembers how far the input was
//! from Hermitian, so products such as `ρΠρ` can be brought back onto the
//! Hermitian manifold without silently hiding gross errors.
//!
//! Spectral work is delegated to nalgebra's Hermitian eigensolver; the
//! functions here add the contracts the solver relies on (ascending order,
//! rank cutoffs, PSD preconditions).

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative cutoff below which eigenvalues count as zero.
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-12;

/// Tolerance on the imaginary part of `Tr AB` for Hermitian `A`, `B`.
const TRACE_IMAG_TOLERANCE: f64 = 1e-10;

/// A dense `p × p` complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
    asymmetry: f64,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from an arbitrary square complex matrix.
    ///
    /// The input is replaced by `(A + A†)/2`; the largest entry of
    /// `|A - A†|` before symmetrization is kept in [`Self::asymmetry`].
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = data.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        for j in 0..cols {
            for i in 0..rows {
                let z = data[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self::symmetrized(data))
    }

    /// Symmetrizes without the finiteness scan; for internal products of
    /// already-validated matrices.
    pub(crate) fn symmetrized(data: DMatrix<Complex64>) -> Self {
        let adjoint = data.adjoint();
        let mut asymmetry = 0.0_f64;
        for (a, b) in data.iter().zip(adjoint.iter()) {
            asymmetry = asymmetry.max((a - b).norm());
        }
        let data = (data + adjoint).scale(0.5);
        Self { data, asymmetry }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::EmptyMatrix);
        }
        for row in rows {
            if row.len() != p {
                return Err(Error::NotSquare {
                    rows: p,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    /// Real symmetric input given row by row.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let p = diag.len();
        Self::new(DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            data: DMatrix::identity(dim, dim),
            asymmetry: 0.0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            data: DMatrix::zeros(dim, dim),
            asymmetry: 0.0,
        }
    }

    /// Rank-one projector-like matrix `v v†` (not normalized).
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let p = v.len();
        Self::new(DMatrix::from_fn(p, p, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// Largest entry of `|A - A†|` seen by the constructor.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.scale(factor),
            asymmetry: 0.0,
        }
    }

    /// `outer · self · outer†`, which stays Hermitian.
    pub fn conjugate_by(&self, outer: &Self) -> Self {
        Self::symmetrized(&outer.data * &self.data * outer.data.adjoint())
    }

    /// Plain matrix product; generally not Hermitian.
    pub fn product(&self, other: &Self) -> DMatrix<Complex64> {
        &self.data * &other.data
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            data: &self.data + &other.data,
            asymmetry: 0.0,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            data: &self.data - &other.data,
            asymmetry: 0.0,
        })
    }

    /// Rows of `[re, im]` pairs, the layout used by the JSON formats.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        let p = self.dim();
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let z = self.data[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`Self::to_pairs`]; symmetrizes like [`Self::new`].
    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: Self) -> HermitianMatrix {
        self.try_add(rhs)
            .expect("dimension mismatch in Hermitian addition")
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: Self) -> HermitianMatrix {
        self.try_sub(rhs)
            .expect("dimension mismatch in Hermitian subtraction")
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        HermitianMatrix::from_pairs(&rows).map_err(D::Error::custom)
    }
}

/// Eigenvalues in ascending order with matching unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    /// `U diag(f(w)) U†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let p = u.nrows();
        let mut scaled = u.clone();
        for (k, &w) in self.eigenvalues.iter().enumerate() {
            let fw = f(w);
            for i in 0..p {
                scaled[(i, k)] *= fw;
            }
        }
        HermitianMatrix::symmetrized(scaled * u.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_spectrum(|w| w)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Closed form for `[[a, b], [b̄, d]]`. The eigenvector of the larger
/// eigenvalue is taken from whichever row avoids cancellation; the other
/// is its orthogonal complement.
fn eig_2x2(m: &DMatrix<Complex64>) -> EigenDecomposition {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let radius = half_diff.hypot(b.norm());
    let zero = Complex64::new(0.0, 0.0);
    let (x, y) = if b.norm() == 0.0 {
        if a >= d {
            (Complex64::new(1.0, 0.0), zero)
        } else {
            (zero, Complex64::new(1.0, 0.0))
        }
    } else if half_diff >= 0.0 {
        (Complex64::new(half_diff + radius, 0.0), b.conj())
    } else {
        (b, Complex64::new(radius - half_diff, 0.0))
    };
    // Rescale first: squaring a subnormal component would underflow to 0.
    let scale = x.norm().max(y.norm());
    let (x, y) = (x / scale, y / scale);
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let (x, y) = (x / norm, y / norm);
    // columns: (low, high)
    let eigenvectors = DMatrix::from_row_slice(2, 2, &[-y.conj(), x, x.conj(), y]);
    EigenDecomposition {
        eigenvalues: vec![mean - radius, mean + radius],
        eigenvectors,
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let p = a.dim();
    if p == 1 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![a.data[(0, 0)].re],
            eigenvectors: DMatrix::identity(1, 1),
        });
    }
    if p == 2 {
        return Ok(eig_2x2(&a.data));
    }
    let eig = SymmetricEigen::try_new(a.data.clone(), f64::EPSILON, 1000 * p.max(4))
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if eigenvalues.iter().any(|w| !w.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let eigenvectors = DMatrix::from_fn(p, p, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn min_eigenvalue(a: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.min_eigenvalue())
}

fn check_psd(eig: &EigenDecomposition, rank_cutoff: f64) -> Result<()> {
    let lo = eig.min_eigenvalue();
    let hi = eig.max_eigenvalue();
    if lo < -rank_cutoff * hi.max(1.0) {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lo });
    }
    Ok(())
}

/// Principal square root of a PSD matrix. Eigenvalues at or below
/// `rank_cutoff · max eigenvalue` are mapped to zero.
pub fn sqrt_psd(a: &HermitianMatrix, rank_cutoff: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    check_psd(&eig, rank_cutoff)?;
    let cut = rank_cutoff * eig.max_eigenvalue().max(0.0);
    Ok(eig.map_spectrum(|w| if w > cut { w.sqrt() } else { 0.0 }))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix. Eigenvalues at or below
/// `rank_cutoff · max eigenvalue` are treated as zero.
pub fn pinv_psd(a: &HermitianMatrix, rank_cutoff: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    check_psd(&eig, rank_cutoff)?;
    let cut = rank_cutoff * eig.max_eigenvalue().max(0.0);
    Ok(eig.map_spectrum(|w| if w > cut { 1.0 / w } else { 0.0 }))
}

/// `A^{-1/2}` on the support of a PSD matrix, zero on its kernel.
pub fn inv_sqrt_psd(a: &HermitianMatrix, rank_cutoff: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    check_psd(&eig, rank_cutoff)?;
    let cut = rank_cutoff * eig.max_eigenvalue().max(0.0);
    Ok(eig.map_spectrum(|w| if w > cut { 1.0 / w.sqrt() } else { 0.0 }))
}

/// `Re Tr(AB)`.
pub fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    a.check_dim(b)?;
    let p = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..p {
        for j in 0..p {
            acc += a.data[(i, j)] * b.data[(j, i)];
        }
    }
    debug_assert!(
        acc.im.abs() <= TRACE_IMAG_TOLERANCE * (1.0 + a.max_abs() * b.max_abs() * (p * p) as f64),
        "Tr AB has imaginary part {}",
        acc.im
    );
    Ok(acc.re)
}
