//! Families of symmetric matrices with cached aggregate statistics, plus
//! seeded instance generators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{eig_sym, spectral_norm, SymMatrix};
use crate::error::{Error, Result};
use crate::rng::derived_rng;

/// Ordered list of n symmetric d×d matrices together with the aggregates
/// that every bound in the toolkit is phrased in: Σ Aᵢ², its spectral norm
/// and trace, and per-matrix norms.
#[derive(Debug, Clone)]
pub struct MatrixFamily {
    matrices: Vec<SymMatrix>,
    dim: usize,
    sum_sq: SymMatrix,
    spectral_norm_of_sum: f64,
    trace_of_sum: f64,
    per_spectral: Vec<f64>,
    per_frobenius: Vec<f64>,
    /// Generator metadata when the family came from `gen_family`.
    pub meta: Option<FamilyMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FamilyMeta {
    pub kind: String,
    pub seed: u64,
}

/// Instance generators. Dimensions for `HadamardRows` must be powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Symmetric Gaussian draws normalized to unit spectral norm.
    GaussianUnit,
    /// Diagonal matrices of uniform entries, normalized; the vector case.
    DiagonalVectors,
    /// Diagonal matrices whose diagonals are rows of the d×d Hadamard matrix.
    HadamardRows,
    /// Diagonal matrices supported on the first `support` coordinates, where
    /// random signing is far from optimal.
    SparseDiagonal { support: usize },
    /// Exactly `rank` eigenvalues in {−1, +1} on a random basis, the rest zero.
    ModerateRank { rank: usize },
}

impl FamilyKind {
    pub fn name(&self) -> String {
        match self {
            FamilyKind::GaussianUnit => "gaussian_unit".into(),
            FamilyKind::DiagonalVectors => "diagonal_vectors".into(),
            FamilyKind::HadamardRows => "hadamard_rows".into(),
            FamilyKind::SparseDiagonal { support } => format!("sparse_diagonal({support})"),
            FamilyKind::ModerateRank { rank } => format!("moderate_rank({rank})"),
        }
    }

    /// Parse "gaussian_unit", "sparse_diagonal(8)", "moderate_rank(4)", ...
    pub fn parse(s: &str) -> Result<FamilyKind> {
        let s = s.trim();
        let (head, arg) = match s.find('(') {
            Some(p) if s.ends_with(')') => (&s[..p], Some(&s[p + 1..s.len() - 1])),
            Some(_) => {
                return Err(Error::ConfigError(format!("unbalanced parens in kind {s:?}")))
            }
            None => (s, None),
        };
        let parse_arg = |what: &str| -> Result<usize> {
            arg.ok_or_else(|| Error::ConfigError(format!("kind {head} needs a {what} argument")))?
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::ConfigError(format!("bad {what} argument: {e}")))
        };
        match head {
            "gaussian_unit" => Ok(FamilyKind::GaussianUnit),
            "diagonal_vectors" => Ok(FamilyKind::DiagonalVectors),
            "hadamard_rows" => Ok(FamilyKind::HadamardRows),
            "sparse_diagonal" => Ok(FamilyKind::SparseDiagonal {
                support: parse_arg("support")?,
            }),
            "moderate_rank" => Ok(FamilyKind::ModerateRank {
                rank: parse_arg("rank")?,
            }),
            other => Err(Error::ConfigError(format!("unknown family kind {other:?}"))),
        }
    }
}

impl MatrixFamily {
    pub fn new(matrices: Vec<SymMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::ConfigError("family must contain at least one matrix".into()));
        }
        let dim = matrices[0].dim();
        for (i, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::ShapeError(format!(
                    "matrix {i} has dim {}, expected {dim}",
                    m.dim()
                )));
            }
        }
        let mut sum_sq = SymMatrix::zeros(dim);
        for m in &matrices {
            sum_sq.axpy(1.0, &m.square());
        }
        let spectral_norm_of_sum = spectral_norm(&sum_sq)?;
        let trace_of_sum = sum_sq.trace();
        let per_spectral = matrices
            .iter()
            .map(spectral_norm)
            .collect::<Result<Vec<_>>>()?;
        let per_frobenius = matrices.iter().map(|m| m.frobenius_norm()).collect();
        Ok(MatrixFamily {
            matrices,
            dim,
            sum_sq,
            spectral_norm_of_sum,
            trace_of_sum,
            per_spectral,
            per_frobenius,
            meta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &SymMatrix {
        &self.matrices[i]
    }

    /// Σ Aᵢ².
    pub fn sum_sq(&self) -> &SymMatrix {
        &self.sum_sq
    }

    /// ‖Σ Aᵢ²‖.
    pub fn spectral_norm_of_sum(&self) -> f64 {
        self.spectral_norm_of_sum
    }

    /// Tr Σ Aᵢ² = Σᵢ ‖Aᵢ‖_F².
    pub fn trace_of_sum(&self) -> f64 {
        self.trace_of_sum
    }

    pub fn per_spectral_norms(&self) -> &[f64] {
        &self.per_spectral
    }

    pub fn per_frobenius_norms(&self) -> &[f64] {
        &self.per_frobenius
    }

    /// Σᵢ xᵢAᵢ for a weight vector of length n.
    pub fn weighted_sum(&self, x: &[f64]) -> Result<SymMatrix> {
        if x.len() != self.len() {
            return Err(Error::ShapeError(format!(
                "weight vector has length {}, family has {}",
                x.len(),
                self.len()
            )));
        }
        let mut m = SymMatrix::zeros(self.dim);
        for (xi, a) in x.iter().zip(&self.matrices) {
            if *xi != 0.0 {
                m.axpy(*xi, a);
            }
        }
        Ok(m)
    }

    /// Largest |Tr Aᵢ|; zero for traceless families.
    pub fn max_abs_trace(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.trace().abs())
            .fold(0.0, f64::max)
    }

    /// New family with each matrix shifted to zero trace, Aᵢ − (Tr Aᵢ/d)·I.
    pub fn recentred(&self) -> Result<MatrixFamily> {
        let d = self.dim as f64;
        let shifted = self
            .matrices
            .iter()
            .map(|m| {
                let shift = m.trace() / d;
                let mut out = m.clone();
                for i in 0..self.dim {
                    let v = out.get(i, i) - shift;
                    out.set_sym(i, i, v);
                }
                out
            })
            .collect();
        MatrixFamily::new(shifted)
    }

    /// Scaled copy, s·Aᵢ for every i.
    pub fn scaled(&self, s: f64) -> Result<MatrixFamily> {
        MatrixFamily::new(self.matrices.iter().map(|m| m.scaled(s)).collect())
    }
}

/// Entry (i, j) of the 2^k × 2^k Hadamard matrix (Sylvester construction).
pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gram-Schmidt a fresh Gaussian vector against the columns collected so far.
fn orthonormal_columns(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(count);
    while cols.len() < count {
        let mut v = gaussian_vec(rng, dim);
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * ci;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // degenerate draw, retry
        }
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    cols
}

/// Deterministic seeded instance generation. Every produced matrix has
/// spectral norm at most 1 (exactly 1 for the nonzero kinds, by
/// normalization).
pub fn gen_family(kind: FamilyKind, n: usize, d: usize, seed: u64) -> Result<MatrixFamily> {
    if n == 0 || d == 0 {
        return Err(Error::ConfigError(format!(
            "family dimensions must be positive, got n={n} d={d}"
        )));
    }
    match kind {
        FamilyKind::HadamardRows => {
            if !d.is_power_of_two() {
                return Err(Error::ConfigError(format!(
                    "hadamard_rows needs d to be a power of 2, got {d}"
                )));
            }
            if n > d {
                return Err(Error::ConfigError(format!(
                    "hadamard_rows has only d={d} distinct rows, requested n={n}"
                )));
            }
        }
        FamilyKind::SparseDiagonal { support } => {
            if support == 0 || support > d {
                return Err(Error::ConfigError(format!(
                    "sparse_diagonal support must be in 1..={d}, got {support}"
                )));
            }
        }
        FamilyKind::ModerateRank { rank } => {
            if rank == 0 || rank > d {
                return Err(Error::ConfigError(format!(
                    "moderate_rank rank must be in 1..={d}, got {rank}"
                )));
            }
        }
        _ => {}
    }

    let mut matrices = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = derived_rng(seed, i as u64);
        let m = match kind {
            FamilyKind::GaussianUnit => {
                let raw = SymMatrix::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))?;
                let norm = spectral_norm(&raw)?;
                if norm == 0.0 {
                    raw
                } else {
                    raw.scaled(1.0 / norm)
                }
            }
            FamilyKind::DiagonalVectors => {
                let diag: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scaled: Vec<f64> = if norm == 0.0 {
                    diag
                } else {
                    diag.iter().map(|v| v / norm).collect()
                };
                SymMatrix::diag(&scaled)
            }
            FamilyKind::HadamardRows => {
                let diag: Vec<f64> = (0..d).map(|j| hadamard_entry(i, j)).collect();
                SymMatrix::diag(&diag)
            }
            FamilyKind::SparseDiagonal { support } => {
                let mut diag = vec![0.0; d];
                for slot in diag.iter_mut().take(support) {
                    *slot = rng.gen_range(-1.0..1.0);
                }
                let norm = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if norm > 0.0 {
                    for v in &mut diag {
                        *v /= norm;
                    }
                }
                SymMatrix::diag(&diag)
            }
            FamilyKind::ModerateRank { rank } => {
                let basis = orthonormal_columns(&mut rng, d, rank);
                let mut m = SymMatrix::zeros(d);
                for u in &basis {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    m.axpy(sign, &SymMatrix::outer(u));
                }
                m
            }
        };
        matrices.push(m);
    }
    let mut family = MatrixFamily::new(matrices)?;
    family.meta = Some(FamilyMeta {
        kind: kind.name(),
        seed,
    });
    Ok(family)
}
