//! Shared generators and naive reference implementations for the
//! integration suites. The oracles here avoid the library's own products,
//! norms and eigen-solver on purpose.

#![allow(dead_code)]

use std::path::PathBuf;

use chainstab::{Matrix, MatrixSystem, SignMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// Random sign matrix: each entry on with probability `density`, then any
/// empty row gets one random entry.
pub fn random_sign(rng: &mut ChaCha8Rng, k: usize, density: f64) -> SignMatrix {
    let mut raw = vec![vec![0u8; k]; k];
    for row in raw.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.random_bool(density) as u8;
        }
        if !row.contains(&1) {
            row[rng.random_range(0..k)] = 1;
        }
    }
    SignMatrix::new(&raw).unwrap()
}

/// Random sign matrix that contains the cycle 1 -> 2 -> ... -> K -> 1.
pub fn random_irreducible_sign(rng: &mut ChaCha8Rng, k: usize, density: f64) -> SignMatrix {
    let mut raw = random_sign(rng, k, density).to_rows();
    for i in 0..k {
        raw[i][(i + 1) % k] = 1;
    }
    SignMatrix::new(&raw).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_system(rng: &mut ChaCha8Rng, k: usize, d: usize) -> MatrixSystem {
    let sign = random_sign(rng, k, 0.6);
    let mats = (0..k).map(|_| random_matrix(rng, d, d)).collect();
    MatrixSystem::new(mats, sign).unwrap()
}

/// Row-stochastic matrix with the given support and random positive weights.
pub fn random_stochastic(rng: &mut ChaCha8Rng, sign: &SignMatrix) -> Matrix {
    let k = sign.size();
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        let mut sum = 0.0;
        for j in 0..k {
            if sign.allows(i, j) {
                let w = rng.random_range(0.05..1.0);
                data[i * k + j] = w;
                sum += w;
            }
        }
        for j in 0..k {
            data[i * k + j] /= sum;
        }
    }
    Matrix::new(k, k, data).unwrap()
}

/// All words of length `n` over `k` symbols, lexicographic, 0-based.
pub fn all_words(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut w = vec![0; n];
    loop {
        out.push(w.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            w[i] += 1;
            if w[i] < k {
                break;
            }
            w[i] = 0;
        }
    }
}

pub fn naive_admissible(sign: &SignMatrix, w: &[usize]) -> bool {
    w.windows(2).all(|p| sign.entry(p[0], p[1]) == 1)
}

pub fn naive_periodic(sign: &SignMatrix, w: &[usize]) -> bool {
    naive_admissible(sign, w) && sign.entry(w[w.len() - 1], w[0]) == 1
}

/// Dense row-major product by the textbook triple loop.
pub fn naive_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut s = 0.0;
            for t in 0..m {
                s += a[i][t] * b[t][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn naive_product(mats: &[Vec<Vec<f64>>], w: &[usize]) -> Vec<Vec<f64>> {
    w[1..]
        .iter()
        .fold(mats[w[0]].clone(), |acc, &k| naive_mul(&acc, &mats[k]))
}

/// Largest singular value of a 1x1 or 2x2 matrix in closed form.
pub fn small_norm(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        1 => a[0][0].abs(),
        2 => {
            let t: f64 = a.iter().flatten().map(|x| x * x).sum();
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            ((t + (t * t - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
        }
        _ => panic!("closed form only for 1x1 and 2x2"),
    }
}

/// Spectral radius of a 1x1 or 2x2 matrix from the characteristic
/// polynomial.
pub fn small_radius(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        1 => a[0][0].abs(),
        2 => {
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let r = disc.sqrt();
                (tr / 2.0 + r).abs().max((tr / 2.0 - r).abs())
            } else {
                det.abs().sqrt()
            }
        }
        _ => panic!("closed form only for 1x1 and 2x2"),
    }
}

/// Largest singular value by power iteration on `A^T A`.
pub fn power_norm(a: &[Vec<f64>]) -> f64 {
    let cols = a[0].len();
    let ata: Vec<Vec<f64>> = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| a.iter().map(|r| r[i] * r[j]).sum())
                .collect()
        })
        .collect();
    let mut v: Vec<f64> = (0..cols).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w: Vec<f64> = ata
            .iter()
            .map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum())
            .collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let next_lambda = n / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / n).collect();
        if (next_lambda - lambda).abs() <= 1e-15 * next_lambda {
            lambda = next_lambda;
            break;
        }
        lambda = next_lambda;
    }
    lambda.sqrt()
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}
