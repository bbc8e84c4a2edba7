//! The discrimination problem as a semidefinite program.
//!
//! With an orthonormal Hermitian basis `{Γ_i}` (`Γ_1 = I/√p`), the
//! problem "maximize `Σ ξ_j Tr ρ_j Π_j` over POVMs" is the SDP
//!
//! ```text
//! maximize  -Tr F0 Z   s.t.  Z ⪰ 0,  Tr F_i Z = c_i
//! F0 = -⊕_j ξ_j ρ_j,   F_i = ⊕_j Γ_i,   c_i = Tr Γ_i,   Z = ⊕_j Π_j
//! ```
//!
//! whose associated problem "minimize `cᵀx` s.t. `F0 + Σ x_i F_i ⪰ 0`" is
//! solved by the Lagrange operator through `x_i = Tr λ Γ_i`.
//!
//! # SDPA export
//!
//! SDPA stores real symmetric blocks and solves "max `Tr F0 Y` s.t.
//! `Tr F_i Y = c_i`, `Y ⪰ 0`". Each complex block `X` is written as the
//! real embedding `½ [[Re X, -Im X], [Im X, Re X]]`; the factor ½ undoes
//! the doubled spectrum so constraint right-hand sides and objective values
//! carry over unchanged. The constant matrix is written with SDPA's sign
//! convention (`⊕ ξ_j ρ_j`), so the SDPA objective is `P_s` itself.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, trace_product, HermitianMatrix};
use crate::model::{Ensemble, Povm};

/// Orthonormal basis of `p × p` Hermitian matrices.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub dim: usize,
    pub gammas: Vec<HermitianMatrix>,
}

impl OperatorBasis {
    /// `G_ij = Tr Γ_i Γ_j`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.gammas
            .iter()
            .map(|a| {
                self.gammas
                    .iter()
                    .map(|b| trace_product(a, b).expect("basis shares one dimension"))
                    .collect()
            })
            .collect()
    }

    /// Coordinates `x_i = Tr A Γ_i`.
    pub fn coordinates(&self, a: &HermitianMatrix) -> Result<Vec<f64>> {
        self.gammas.iter().map(|g| trace_product(a, g)).collect()
    }
}

/// Generalized Gell-Mann basis: `I/√p`, then the real symmetric pairs,
/// the imaginary antisymmetric pairs and the traceless diagonals, each
/// normalized to `Tr Γ² = 1`. The order is fixed so exported files are
/// stable.
pub fn operator_basis(p: usize) -> OperatorBasis {
    assert!(p >= 1, "dimension must be at least 1");
    let zero = Complex64::new(0.0, 0.0);
    let build = |f: &dyn Fn(usize, usize) -> Complex64| {
        HermitianMatrix::new(DMatrix::from_fn(p, p, f))
            .expect("basis matrices are finite and square")
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut gammas = Vec::with_capacity(p * p);
    gammas.push(HermitianMatrix::identity(p).scale(1.0 / (p as f64).sqrt()));
    for j in 0..p {
        for k in j + 1..p {
            gammas.push(build(&|a, b| {
                if (a, b) == (j, k) || (a, b) == (k, j) {
                    Complex64::new(s, 0.0)
                } else {
                    zero
                }
            }));
        }
    }
    for j in 0..p {
        for k in j + 1..p {
            gammas.push(build(&|a, b| {
                if (a, b) == (j, k) {
                    Complex64::new(0.0, -s)
                } else if (a, b) == (k, j) {
                    Complex64::new(0.0, s)
                } else {
                    zero
                }
            }));
        }
    }
    for l in 1..p {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        gammas.push(build(&|a, b| {
            if a != b {
                zero
            } else if a < l {
                Complex64::new(norm, 0.0)
            } else if a == l {
                Complex64::new(-(l as f64) * norm, 0.0)
            } else {
                zero
            }
        }));
    }
    OperatorBasis { dim: p, gammas }
}

/// Block-diagonal SDP data; each operator is stored as its `M` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub block_count: usize,
    pub block_dim: usize,
    /// Blocks of `F0 = -⊕ ξ_j ρ_j`.
    pub f0: Vec<HermitianMatrix>,
    /// Blocks of each `F_i`.
    pub constraints: Vec<Vec<HermitianMatrix>>,
    pub c: Vec<f64>,
}

fn block_trace(blocks: &[HermitianMatrix], z: &Povm) -> Result<f64> {
    if blocks.len() != z.len() {
        return Err(Error::CountMismatch {
            expected: blocks.len(),
            found: z.len(),
        });
    }
    blocks
        .iter()
        .zip(z.elements())
        .map(|(f, p)| trace_product(f, p))
        .sum()
}

impl SdpProblem {
    /// `-Tr F0 Z` for `Z = ⊕ Π_j`.
    pub fn dual_objective(&self, z: &Povm) -> Result<f64> {
        Ok(-block_trace(&self.f0, z)?)
    }

    /// `Tr F_i Z` for every constraint.
    pub fn constraint_values(&self, z: &Povm) -> Result<Vec<f64>> {
        self.constraints.iter().map(|f| block_trace(f, z)).collect()
    }

    /// Largest `|Tr F_i Z - c_i|`.
    pub fn constraint_violation(&self, z: &Povm) -> Result<f64> {
        Ok(self
            .constraint_values(z)?
            .iter()
            .zip(&self.c)
            .fold(0.0_f64, |m, (v, c)| m.max((v - c).abs())))
    }

    /// Blocks of `F(x) = F0 + Σ x_i F_i`.
    pub fn primal_matrix(&self, x: &[f64]) -> Result<Vec<HermitianMatrix>> {
        if x.len() != self.constraints.len() {
            return Err(Error::CountMismatch {
                expected: self.constraints.len(),
                found: x.len(),
            });
        }
        Ok((0..self.block_count)
            .map(|b| {
                let mut acc = self.f0[b].clone();
                for (xi, f) in x.iter().zip(&self.constraints) {
                    acc = &acc + &f[b].scale(*xi);
                }
                acc
            })
            .collect())
    }
}

/// Assembles `F0`, `F_i` and `c` for an ensemble.
pub fn build_dual_sdp(e: &Ensemble) -> SdpProblem {
    let basis = operator_basis(e.dim());
    let m = e.len();
    SdpProblem {
        block_count: m,
        block_dim: e.dim(),
        f0: (0..m).map(|j| e.weighted_state(j).scale(-1.0)).collect(),
        constraints: basis.gammas.iter().map(|g| vec![g.clone(); m]).collect(),
        // Only Γ_1 = I/√p has a trace; set it exactly rather than summing.
        c: (0..basis.gammas.len())
            .map(|i| if i == 0 { (e.dim() as f64).sqrt() } else { 0.0 })
            .collect(),
    }
}

/// The primal point associated with a Lagrange operator.
#[derive(Debug, Clone)]
pub struct PrimalPoint {
    /// `x_i = Tr λ Γ_i`.
    pub x: Vec<f64>,
    /// `cᵀx = Tr λ`.
    pub value: f64,
    /// Smallest eigenvalue of `F(x)` over all blocks; `≥ 0` iff feasible.
    pub min_eigenvalue: f64,
}

pub fn primal_objective(e: &Ensemble, lambda: &HermitianMatrix) -> Result<PrimalPoint> {
    if lambda.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: lambda.dim(),
        });
    }
    let sdp = build_dual_sdp(e);
    let x = operator_basis(e.dim()).coordinates(lambda)?;
    let value = x.iter().zip(&sdp.c).map(|(a, b)| a * b).sum();
    let mut min_eigenvalue = f64::INFINITY;
    for block in sdp.primal_matrix(&x)? {
        min_eigenvalue = min_eigenvalue.min(eig_hermitian(&block)?.min_eigenvalue());
    }
    Ok(PrimalPoint {
        x,
        value,
        min_eigenvalue,
    })
}

/// `[[Re X, -Im X], [Im X, Re X]]`.
pub fn real_embedding(x: &HermitianMatrix) -> DMatrix<f64> {
    let p = x.dim();
    DMatrix::from_fn(2 * p, 2 * p, |r, c| {
        let z = x.get(r % p, c % p);
        match (r < p, c < p) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`real_embedding`]; fails if the block structure is broken.
pub fn complex_from_embedding(m: &DMatrix<f64>) -> Result<HermitianMatrix> {
    let n = m.nrows();
    if !n.is_multiple_of(2) || m.ncols() != n || n == 0 {
        return Err(Error::InvalidInput(format!(
            "{n}x{} is not a real embedding",
            m.ncols()
        )));
    }
    let p = n / 2;
    for i in 0..p {
        for j in 0..p {
            if m[(i, j)] != m[(i + p, j + p)] || m[(i, j + p)] != -m[(i + p, j)] {
                return Err(Error::InvalidInput(format!(
                    "block ({i}, {j}) does not have the [[A, -B], [B, A]] structure"
                )));
            }
        }
    }
    HermitianMatrix::new(DMatrix::from_fn(p, p, |i, j| {
        Complex64::new(m[(i, j)], m[(i + p, j)])
    }))
}

fn fmt_coefficient(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the problem in sparse SDPA format.
pub fn to_sdpa(p: &SdpProblem) -> String {
    let mut out = String::new();
    let n = 2 * p.block_dim;
    writeln!(out, "{} = mDIM", p.constraints.len()).unwrap();
    writeln!(out, "{} = nBLOCK", p.block_count).unwrap();
    let sizes: Vec<String> = (0..p.block_count).map(|_| n.to_string()).collect();
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let c: Vec<String> = p.c.iter().map(|&v| fmt_coefficient(v)).collect();
    writeln!(out, "{}", c.join(" ")).unwrap();

    // SDPA's constant matrix is the negated F0.
    let constant: Vec<HermitianMatrix> = p.f0.iter().map(|b| b.scale(-1.0)).collect();
    let matrices = std::iter::once(&constant).chain(p.constraints.iter());
    for (matno, blocks) in matrices.enumerate() {
        for (b, block) in blocks.iter().enumerate() {
            let real = real_embedding(block);
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * real[(i, j)];
                    if v != 0.0 {
                        writeln!(
                            out,
                            "{matno} {} {} {} {}",
                            b + 1,
                            i + 1,
                            j + 1,
                            fmt_coefficient(v)
                        )
                        .unwrap();
                    }
                }
            }
        }
    }
    out
}

pub fn export_sdpa(p: &SdpProblem, path: &Path) -> Result<()> {
    std::fs::write(path, to_sdpa(p))?;
    Ok(())
}

fn sdpa_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: format!("line {line}"),
        message: message.into(),
    }
}

fn leading_int(line: &str, lineno: usize) -> Result<usize> {
    line.split(|ch: char| ch.is_whitespace() || ch == '=' || ch == ',')
        .find(|t| !t.is_empty())
        .ok_or_else(|| sdpa_err(lineno, "missing integer"))?
        .parse()
        .map_err(|_| sdpa_err(lineno, "expected an integer"))
}

/// Parses a file written by [`to_sdpa`] back into an [`SdpProblem`].
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| sdpa_err(0, format!("missing {what}")))
    };

    let (ln, l) = next("mDIM")?;
    let m = leading_int(l, ln)?;
    let (ln, l) = next("nBLOCK")?;
    let nblock = leading_int(l, ln)?;
    let (ln, l) = next("block sizes")?;
    let sizes: Vec<usize> = l
        .split(|ch: char| {
            ch.is_whitespace() || ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')'
        })
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| sdpa_err(ln, format!("bad block size {t:?}")))
        })
        .collect::<Result<_>>()?;
    if sizes.len() != nblock || nblock == 0 {
        return Err(sdpa_err(ln, "block count does not match nBLOCK"));
    }
    let n = sizes[0];
    if sizes.iter().any(|&s| s != n) || !n.is_multiple_of(2) {
        return Err(sdpa_err(ln, "blocks must share one even size"));
    }
    let (ln, l) = next("c vector")?;
    let c: Vec<f64> = l
        .split(|ch: char| ch.is_whitespace() || ch == ',' || ch == '{' || ch == '}')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| sdpa_err(ln, format!("bad coefficient {t:?}")))
        })
        .collect::<Result<_>>()?;
    if c.len() != m {
        return Err(sdpa_err(
            ln,
            format!("expected {m} coefficients, found {}", c.len()),
        ));
    }

    let mut dense = vec![vec![DMatrix::<f64>::zeros(n, n); nblock]; m + 1];
    for (ln, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 5 {
            return Err(sdpa_err(ln, "expected `matno blkno i j value`"));
        }
        let idx = |k: usize| -> Result<usize> {
            t[k].parse()
                .map_err(|_| sdpa_err(ln, format!("bad index {:?}", t[k])))
        };
        let (matno, blk, i, j) = (idx(0)?, idx(1)?, idx(2)?, idx(3)?);
        let v: f64 = t[4]
            .parse()
            .map_err(|_| sdpa_err(ln, format!("bad value {:?}", t[4])))?;
        if matno > m || blk == 0 || blk > nblock || i == 0 || j == 0 || i > n || j > n {
            return Err(sdpa_err(ln, "index out of range"));
        }
        let block = &mut dense[matno][blk - 1];
        block[(i - 1, j - 1)] = v;
        block[(j - 1, i - 1)] = v;
    }

    let unembed = |blocks: &[DMatrix<f64>], sign: f64| -> Result<Vec<HermitianMatrix>> {
        blocks
            .iter()
            .map(|b| complex_from_embedding(&b.scale(2.0 * sign)))
            .collect()
    };
    let mut mats = dense.into_iter();
    let f0 = unembed(&mats.next().expect("constant matrix slot"), -1.0)?;
    let constraints = mats.map(|b| unembed(&b, 1.0)).collect::<Result<Vec<_>>>()?;
    Ok(SdpProblem {
        block_count: nblock,
        block_dim: n / 2,
        f0,
        constraints,
        c,
    })
}

pub fn read_sdpa(path: &Path) -> Result<SdpProblem> {
    parse_sdpa(&std::fs::read_to_string(path)?)
}
