//! The `{0,1}`-matrix lift of a sign-constrained matrix system.
//!
//! For a system `{S_1, ..., S_K}` with sign matrix `S`, the lifted system is
//! `{S^(1), ..., S^(K)}` with `S^(k) = (e_k^T s_k) ⊗ S_k`, where `e_k` is the
//! k-th unit row and `s_k` the k-th row of the sign matrix. Only block row
//! `k` of `S^(k)` is nonzero, and its block `(k, j)` is `S_k` when `k -> j`
//! is allowed.
//!
//! Products of lifted matrices turn constrained products into free ones:
//!
//! * a non-admissible word has an exactly-zero lifted product;
//! * an admissible word `w` has lifted spectral radius
//!   `s[last][first] * ρ(S_w)`, so words that are not periodically
//!   extendable have nilpotent lifted products;
//! * the lifted product norm dominates the base product norm.
//!
//! The selector here is the row form `e_k^T s_k`. The transposed column form
//! `s_k^T e_k` gives the transposed lift.

use crate::error::{Error, Result};
use crate::linalg::{product_along_word, Matrix};
use crate::subshift::{SignMatrix, Word};

/// State matrices `S_1..S_K` (all `d x d`) with their transition sign matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSystem {
    matrices: Vec<Matrix>,
    sign: SignMatrix,
    dim: usize,
}

impl MatrixSystem {
    pub fn new(matrices: Vec<Matrix>, sign: SignMatrix) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidSystem("at least one matrix is required".into()))?;
        let dim = first.rows();
        for (k, m) in matrices.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::InvalidSystem(format!(
                    "matrix {} is {}x{}, expected {dim}x{dim}",
                    k + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if sign.size() != matrices.len() {
            return Err(Error::InvalidSystem(format!(
                "sign matrix is {0}x{0} but there are {1} matrices",
                sign.size(),
                matrices.len()
            )));
        }
        Ok(MatrixSystem {
            matrices,
            sign,
            dim,
        })
    }

    /// Unconstrained system: every transition allowed.
    pub fn full_shift(matrices: Vec<Matrix>) -> Result<Self> {
        let k = matrices.len().max(1);
        MatrixSystem::new(matrices, SignMatrix::full(k))
    }

    pub fn alphabet(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn sign(&self) -> &SignMatrix {
        &self.sign
    }

    pub fn scaled(&self, c: f64) -> MatrixSystem {
        MatrixSystem {
            matrices: self.matrices.iter().map(|m| m.scaled(c)).collect(),
            sign: self.sign.clone(),
            dim: self.dim,
        }
    }

    pub fn product(&self, word: &Word) -> Result<Matrix> {
        product_along_word(&self.matrices, word)
    }
}

/// The row selector `e_k^T s_k`: a `K x K` `{0,1}` matrix whose only nonzero
/// row is row `k`, equal to row `k` of the sign matrix.
pub fn selector(sign: &SignMatrix, k: usize) -> Matrix {
    let size = sign.size();
    let mut data = vec![0.0; size * size];
    for j in 0..size {
        data[k * size + j] = f64::from(sign.entry(k, j));
    }
    Matrix::new(size, size, data).expect("selector dimensions are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    alphabet: usize,
    base_dim: usize,
    lifted: Vec<Matrix>,
    sign: SignMatrix,
}

impl LiftedSystem {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Lifted dimension `K * d`.
    pub fn dim(&self) -> usize {
        self.alphabet * self.base_dim
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.lifted
    }

    pub fn sign(&self) -> &SignMatrix {
        &self.sign
    }

    pub fn product(&self, word: &Word) -> Result<Matrix> {
        product_along_word(&self.lifted, word)
    }
}

/// Builds the lift by placing `S_k` in each allowed block of block row `k`.
pub fn build_lift(sys: &MatrixSystem) -> LiftedSystem {
    let k = sys.alphabet();
    let d = sys.dim();
    let n = k * d;
    let lifted = sys
        .matrices()
        .iter()
        .enumerate()
        .map(|(row, s)| {
            let mut data = vec![0.0; n * n];
            for col in 0..k {
                if !sys.sign().allows(row, col) {
                    continue;
                }
                for p in 0..d {
                    let dst = (row * d + p) * n + col * d;
                    data[dst..dst + d].copy_from_slice(s.row(p));
                }
            }
            Matrix::new(n, n, data).expect("lifted dimensions are valid")
        })
        .collect();
    LiftedSystem {
        alphabet: k,
        base_dim: d,
        lifted,
        sign: sys.sign().clone(),
    }
}

/// Whether the lifted product along `word` is numerically zero. For words
/// that are not admissible this always holds.
pub fn check_annihilation(lift: &LiftedSystem, word: &Word) -> Result<bool> {
    word.check_alphabet(lift.alphabet())?;
    let prod = lift.product(word)?;
    let scale = word
        .symbols()
        .iter()
        .map(|&s| lift.matrices()[s].max_abs().max(f64::MIN_POSITIVE))
        .product::<f64>();
    Ok(prod.is_numerically_zero(scale))
}

/// `(s[last][first] * ρ(base product), ρ(lifted product))` for an
/// admissible word. The two components agree up to rounding.
pub fn lifted_vs_base_radius(
    sys: &MatrixSystem,
    lift: &LiftedSystem,
    word: &Word,
) -> Result<(f64, f64)> {
    word.check_alphabet(sys.alphabet())?;
    if !word.is_admissible(sys.sign()) {
        return Err(Error::InvalidArgument(format!(
            "word {word} is not admissible"
        )));
    }
    let syms = word.symbols();
    let wrap = f64::from(sys.sign().entry(syms[syms.len() - 1], syms[0]));
    let base = sys.product(word)?.spectral_radius()?;
    let lifted = lift.product(word)?.spectral_radius()?;
    Ok((wrap * base, lifted))
}
