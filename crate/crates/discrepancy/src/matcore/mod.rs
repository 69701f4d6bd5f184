//! Dense symmetric linear algebra at desk scale.
//!
//! Everything here is sized for dimensions in the hundreds: matrices are
//! plain row-major `Vec<f64>`, the eigensolver is cyclic Jacobi, and all
//! values are immutable after construction.

mod family;
mod io;

pub use family::{gen_family, FamilyKind, MatrixFamily};
pub use io::{read_family, write_family};

use crate::error::{Error, Result};

/// Dense real symmetric matrix. Storage is full row-major with the lower
/// triangle copied from the upper on construction, so `get(i, j) == get(j, i)`
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Dense rectangular matrix, row-major. Used for dilations, sketches, and
/// the occasional non-symmetric product.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

/// Eigendecomposition of a symmetric matrix: eigenvalues sorted descending,
/// eigenvectors as orthonormal columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector for `eigenvalues[k]`, stored row-major
    /// (entry (i, k) at `i * dim + k`).
    pub eigenvectors: Vec<f64>,
    pub dim: usize,
}

impl SymMatrix {
    /// Build from full row-major entries, canonicalizing the lower triangle
    /// from the upper. Entries must be finite and the input must already be
    /// symmetric up to `sym_tol` (absolute).
    pub fn from_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::ShapeError(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                entries.len()
            )));
        }
        for (k, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite entry {} at flat index {}",
                    v, k
                )));
            }
        }
        let mut data = entries.to_vec();
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                if (a - b).abs() > 1e-9 * scale.max(1.0) {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                data[j * dim + i] = a;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Build from an upper-triangle generator; symmetry holds by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "non-finite entry {v} at ({i}, {j})"
                    )));
                }
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = entries[i];
        }
        m
    }

    /// Rank-one matrix u uᵀ.
    pub fn outer(u: &[f64]) -> Self {
        let dim = u.len();
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = u[i] * u[j];
            }
        }
        SymMatrix { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Set entry (i, j) and its mirror.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius inner product ⟨A, B⟩ = Tr(AB).
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// A², symmetric by construction.
    pub fn square(&self) -> SymMatrix {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.data[i * n + k] * self.data[j * n + k];
                }
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        SymMatrix { dim: n, data: out }
    }

    /// Quadratic form xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let n = self.dim;
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.data[i * n + j] * x[j];
            }
            total += x[i] * row;
        }
        total
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.data[i * n + j] * x[j];
            }
            out[i] = s;
        }
        out
    }

    /// Kronecker product with another symmetric matrix.
    pub fn kron(&self, other: &SymMatrix) -> SymMatrix {
        let (p, q) = (self.dim, other.dim);
        let n = p * q;
        let mut data = vec![0.0; n * n];
        for i in 0..p {
            for j in 0..p {
                let v = self.get(i, j);
                if v == 0.0 {
                    continue;
                }
                for k in 0..q {
                    for l in 0..q {
                        data[(i * q + k) * n + (j * q + l)] = v * other.get(k, l);
                    }
                }
            }
        }
        SymMatrix { dim: n, data }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl Matrix {
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeError(format!(
                "expected {} entries for {}x{}, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {v}")));
        }
        Ok(Matrix {
            rows,
            cols,
            data: entries.to_vec(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.get(i, k);
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += v * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.data[i * self.cols + j] * x[j];
            }
            out[i] = s;
        }
        out
    }

    /// Interpret as symmetric; errors if it is not (within 1e-9 absolute,
    /// relative to the largest entry).
    pub fn into_sym(self) -> Result<SymMatrix> {
        if self.rows != self.cols {
            return Err(Error::ShapeError(format!(
                "matrix is {}x{}, not square",
                self.rows, self.cols
            )));
        }
        SymMatrix::from_rows(self.rows, &self.data)
    }

    /// (M + Mᵀ)/2.
    pub fn symmetrize(&self) -> Result<SymMatrix> {
        if self.rows != self.cols {
            return Err(Error::ShapeError(format!(
                "matrix is {}x{}, not square",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        SymMatrix::from_fn(n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }
}

/// Off-diagonal Frobenius mass, the Jacobi convergence measure.
fn off_diagonal_mass(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = a[i * n + j];
            s += 2.0 * v * v;
        }
    }
    s.sqrt()
}

/// Eigendecomposition by cyclic Jacobi. Sweeps until the off-diagonal mass
/// drops below 1e-12 relative to the Frobenius norm (or 50 sweeps, which at
/// these sizes is never reached in practice).
pub fn eig_sym(m: &SymMatrix) -> Result<Spectrum> {
    let n = m.dim;
    if n == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    let mut a = m.data.clone();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }

    let fro = m.frobenius_norm();
    let tol = 1e-12 * fro.max(f64::MIN_POSITIVE);

    for _sweep in 0..50 {
        if off_diagonal_mass(&a, n) <= tol {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[p * n + r];
                if apr == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let arr = a[r * n + r];
                // rotation angle zeroing a[p][r]
                let theta = (arr - app) / (2.0 * apr);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // rows/columns p and r of A
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                // accumulate Q
                for k in 0..n {
                    let qkp = q[k * n + p];
                    let qkr = q[k * n + r];
                    q[k * n + p] = c * qkp - s * qkr;
                    q[k * n + r] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigvals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    order.sort_by(|&i, &j| eigvals[j].partial_cmp(&eigvals[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigvals[i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[row * n + col] = q[row * n + src];
        }
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        dim: n,
    })
}

impl Spectrum {
    /// Eigenvector for eigenvalue index k, as an owned vector.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.eigenvectors[i * self.dim + k])
            .collect()
    }

    /// Rebuild Q f(Λ) Qᵀ for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.apply_weights(&vals)
    }

    /// Σ_k w_k q_k q_kᵀ for per-eigenvector weights.
    pub fn apply_weights(&self, weights: &[f64]) -> SymMatrix {
        let n = self.dim;
        debug_assert_eq!(weights.len(), n);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += weights[k] * self.eigenvectors[i * n + k] * self.eigenvectors[j * n + k];
                }
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        SymMatrix { dim: n, data }
    }

    /// QΛQᵀ.
    pub fn reconstruct(&self) -> SymMatrix {
        self.apply(|l| l)
    }
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    let spec = eig_sym(m)?;
    Ok(spec
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs())))
}

/// Sum of absolute eigenvalues (dual of the spectral norm).
pub fn nuclear_norm(m: &SymMatrix) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    let spec = eig_sym(m)?;
    Ok(spec.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Symmetric dilation [[0, B], [Bᵀ, 0]] of an arbitrary p×q matrix. Its
/// spectral norm equals the largest singular value of B.
pub fn hermitian_dilation(b: &Matrix) -> Result<SymMatrix> {
    let (p, q) = (b.rows, b.cols);
    let n = p + q;
    SymMatrix::from_fn(n, |i, j| {
        if i < p && j >= p {
            b.get(i, j - p)
        } else {
            // upper-triangle generator only sees i <= j; both-in-top-left and
            // both-in-bottom-right blocks are zero
            0.0
        }
    })
}

/// Split Y into its positive semidefinite and negative semidefinite parts,
/// Y = Y⁺ + Y⁻ with Y⁺Y⁻ ≈ 0.
pub fn psd_split(y: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    let spec = eig_sym(y)?;
    let plus = spec.apply(|l| l.max(0.0));
    let minus = spec.apply(|l| l.min(0.0));
    Ok((plus, minus))
}

/// Block transform used to reduce to PSD witnesses and traceless matrices:
/// Y ↦ diag(Y⁺, −Y⁻) and each Aᵢ ↦ diag(Aᵢ, −Aᵢ). Inner products ⟨Y, Aᵢ⟩
/// and ‖Σ Aᵢ²‖ are preserved; Tr Σ Aᵢ² doubles.
pub fn block_dilate_pair(
    y: &SymMatrix,
    family: &MatrixFamily,
) -> Result<(SymMatrix, MatrixFamily)> {
    if y.dim() != family.dim() {
        return Err(Error::ShapeError(format!(
            "witness dim {} vs family dim {}",
            y.dim(),
            family.dim()
        )));
    }
    let d = y.dim();
    let (y_plus, y_minus) = psd_split(y)?;
    let y_block = SymMatrix::from_fn(2 * d, |i, j| {
        if i < d && j < d {
            y_plus.get(i, j)
        } else if i >= d && j >= d {
            -y_minus.get(i - d, j - d)
        } else {
            0.0
        }
    })?;
    let blocks: Vec<SymMatrix> = family
        .matrices()
        .iter()
        .map(|a| {
            SymMatrix::from_fn(2 * d, |i, j| {
                if i < d && j < d {
                    a.get(i, j)
                } else if i >= d && j >= d {
                    -a.get(i - d, j - d)
                } else {
                    0.0
                }
            })
        })
        .collect::<Result<_>>()?;
    let family_block = MatrixFamily::new(blocks)?;
    Ok((y_block, family_block))
}
