//! Dense real matrices and the handful of kernels the stability analysis
//! needs: products, operator norms, spectral radii and Kronecker products.
//!
//! Everything here is small and dense. Lifted matrices have a single nonzero
//! block row, so the multiply kernel skips zero entries of the left operand
//! and the norm routine drops zero rows and columns before iterating; both
//! are exact and keep lifted sweeps close to the cost of the base system.

mod eigen;
mod svd;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subshift::Word;

pub use eigen::eigenvalues;

/// Relative factor for the "numerically zero" test on products.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Which matrix norm is used for product bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Largest singular value. Multiplicative under Kronecker products.
    #[default]
    Spectral,
    Frobenius,
}

impl Norm {
    pub fn of(self, a: &Matrix) -> f64 {
        match self {
            Norm::Spectral => a.operator_norm(),
            Norm::Frobenius => a.frobenius_norm(),
        }
    }
}

/// Row-major dense real matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must have positive dimensions, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a list of rows, rejecting ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(nrows, ncols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Matrix::new(1, 1, vec![x])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Raw entries for in-place kernels; callers keep entries finite.
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Max-abs entry at most `ZERO_TOLERANCE * scale`, where `scale` is
    /// typically the product of the factor norms.
    pub fn is_numerically_zero(&self, scale: f64) -> bool {
        self.max_abs() <= ZERO_TOLERANCE * scale
    }

    pub fn frobenius_norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        m * self
            .data
            .iter()
            .map(|x| (x / m) * (x / m))
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        svd::largest_singular_value(self)
    }

    /// Largest eigenvalue modulus, via balancing, Hessenberg reduction and
    /// Francis double-shift QR.
    pub fn spectral_radius(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "spectral radius needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        eigen::spectral_radius(self)
    }

    pub fn mat_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        mul_into(self, other, &mut out.data);
        Ok(out)
    }

    /// Kronecker product: block (i, j) is `self[i][j] * other`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out.data[(i * other.rows + p) * cols + j * other.cols + q] =
                            a * other.get(p, q);
                    }
                }
            }
        }
        out
    }
}

/// `out = a * b`, with `out` pre-sized to `a.rows * b.cols`.
pub(crate) fn mul_into(a: &Matrix, b: &Matrix, out: &mut [f64]) {
    debug_assert_eq!(a.cols, b.rows);
    let n = b.cols;
    out.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..a.rows {
        let orow = &mut out[i * n..(i + 1) * n];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// Free-function form of [`Matrix::mat_mul`].
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.mat_mul(b)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kron(b)
}

pub fn operator_norm(a: &Matrix) -> f64 {
    a.operator_norm()
}

pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    a.spectral_radius()
}

/// Ordered product `S[i0] * S[i1] * ... * S[i(n-1)]`, leftmost factor first.
pub fn product_along_word(matrices: &[Matrix], word: &Word) -> Result<Matrix> {
    let symbols = word.symbols();
    let (&first, rest) = symbols.split_first().ok_or(Error::EmptyWord)?;
    let dim = matrices
        .first()
        .map(|m| m.rows)
        .ok_or_else(|| Error::InvalidSystem("no matrices".into()))?;
    if let Some(m) = matrices.iter().find(|m| m.rows != dim || m.cols != dim) {
        return Err(Error::DimensionMismatch(format!(
            "expected square {dim}x{dim} factors, found {}x{}",
            m.rows, m.cols
        )));
    }
    let pick = |s: usize| {
        matrices.get(s).ok_or(Error::SymbolOutOfRange {
            symbol: s + 1,
            alphabet: matrices.len(),
        })
    };
    let mut acc = pick(first)?.clone();
    let mut scratch = vec![0.0; dim * dim];
    for &s in rest {
        mul_into(&acc, pick(s)?, &mut scratch);
        std::mem::swap(&mut acc.data, &mut scratch);
    }
    Ok(acc)
}
