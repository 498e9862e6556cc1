//! Nonhomogeneous Markov chains with a fixed transition sign pattern:
//! trajectory sampling, the stationary measure of an irreducible stochastic
//! matrix, and Monte Carlo estimates of the top Lyapunov exponent.
//!
//! # Random streams
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), addressed as
//! counters rather than drawn sequentially:
//!
//! * the 256-bit key is `seed` (little endian) followed by a 64-bit domain
//!   tag and zero padding;
//! * the stream id is the trajectory index, or the time step for perturbed
//!   transition matrices;
//! * perturbed row `i` at time `t` starts at word position `2 * K * i` of
//!   stream `t`.
//!
//! Trajectory `j` therefore depends only on `(seed, j)`, and the matrix
//! `P(t)` only on `(schedule seed, t)`, whatever order the work runs in.
//! This layout is fixed as [`RNG_CONTRACT`]; changing it changes results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::MatrixSystem;
use crate::linalg::{mul_into, Matrix};
use crate::subshift::{SignMatrix, Word};

pub const RNG_CONTRACT: &str = "chacha8/key=seed|domain/stream=index/v1";

/// Row sums of stochastic matrices must be within this of one.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
/// Residual bound for stationary vectors.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;

const DOMAIN_TRAJECTORY: u64 = 0x7472_616a_6563_7400;
const DOMAIN_SCHEDULE: u64 = 0x7363_6865_6475_6c65;

fn stream_rng(seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// The random stream that drives trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    stream_rng(seed, DOMAIN_TRAJECTORY, index)
}

/// Checks that `p` is row-stochastic with support exactly `sign`.
pub fn check_stochastic(p: &Matrix, sign: &SignMatrix) -> Result<()> {
    let k = sign.size();
    if p.rows() != k || p.cols() != k {
        return Err(Error::InvalidSchedule(format!(
            "transition matrix is {}x{}, expected {k}x{k}",
            p.rows(),
            p.cols()
        )));
    }
    for i in 0..k {
        for j in 0..k {
            let x = p.get(i, j);
            let on = sign.allows(i, j);
            if on && x <= 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "sign/support mismatch at ({}, {}): sign entry is 1 but probability is {x}",
                    i + 1,
                    j + 1
                )));
            }
            if !on && x != 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "sign/support mismatch at ({}, {}): sign entry is 0 but probability is {x}",
                    i + 1,
                    j + 1
                )));
            }
        }
        let sum: f64 = p.row(i).iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidSchedule(format!(
                "row {} sums to {sum}, not 1",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The sign pattern of a nonnegative matrix.
pub fn support_of(p: &Matrix) -> Result<SignMatrix> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch(
            "transition matrix must be square".into(),
        ));
    }
    let raw: Vec<Vec<u8>> = (0..p.rows())
        .map(|i| p.row(i).iter().map(|&x| u8::from(x > 0.0)).collect())
        .collect();
    SignMatrix::new(&raw)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Constant(Matrix),
    /// `P(t) = list[t mod len]`.
    PeriodicList(Vec<Matrix>),
    /// Each support entry of `base` is multiplied by `1 + amplitude * u` with
    /// `u` uniform in `[-1, 1)`, then rows are renormalized.
    RandomPerturbed {
        base: Matrix,
        amplitude: f64,
        seed: u64,
    },
}

/// A time-indexed family of stochastic matrices sharing one sign pattern,
/// plus the initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSchedule {
    sign: SignMatrix,
    initial: Vec<f64>,
    generator: Generator,
}

impl TransitionSchedule {
    pub fn new(sign: SignMatrix, initial: Vec<f64>, generator: Generator) -> Result<Self> {
        let k = sign.size();
        if initial.len() != k {
            return Err(Error::InvalidSchedule(format!(
                "initial distribution has {} entries, expected {k}",
                initial.len()
            )));
        }
        if let Some(i) = initial.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "initial distribution entry {} is {}, must be positive",
                i + 1,
                initial[i]
            )));
        }
        let sum: f64 = initial.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidSchedule(format!(
                "initial distribution sums to {sum}, not 1"
            )));
        }
        match &generator {
            Generator::Constant(p) => check_stochastic(p, &sign)?,
            Generator::PeriodicList(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidSchedule("periodic list is empty".into()));
                }
                for p in list {
                    check_stochastic(p, &sign)?;
                }
            }
            Generator::RandomPerturbed {
                base, amplitude, ..
            } => {
                check_stochastic(base, &sign)?;
                if !(0.0..1.0).contains(amplitude) {
                    return Err(Error::InvalidSchedule(format!(
                        "amplitude {amplitude} must lie in [0, 1)"
                    )));
                }
            }
        }
        Ok(TransitionSchedule {
            sign,
            initial,
            generator,
        })
    }

    /// Homogeneous chain moving uniformly over the allowed successors,
    /// started from the uniform distribution.
    pub fn uniform(sign: &SignMatrix) -> Self {
        let k = sign.size();
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            let deg = sign.out_degree(i) as f64;
            for j in 0..k {
                if sign.allows(i, j) {
                    data[i * k + j] = 1.0 / deg;
                }
            }
        }
        let p = Matrix::new(k, k, data).expect("valid dimensions");
        TransitionSchedule {
            sign: sign.clone(),
            initial: vec![1.0 / k as f64; k],
            generator: Generator::Constant(p),
        }
    }

    pub fn sign(&self) -> &SignMatrix {
        &self.sign
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Writes row `i` of `P(t)` into `out`.
    pub fn row_into(&self, t: u64, i: usize, out: &mut [f64]) {
        let k = self.sign.size();
        match &self.generator {
            Generator::Constant(p) => out.copy_from_slice(p.row(i)),
            Generator::PeriodicList(list) => {
                let p = &list[(t % list.len() as u64) as usize];
                out.copy_from_slice(p.row(i));
            }
            Generator::RandomPerturbed {
                base,
                amplitude,
                seed,
            } => {
                let mut rng = stream_rng(*seed, DOMAIN_SCHEDULE, t);
                rng.set_word_pos(2 * (k * i) as u128);
                let mut sum = 0.0;
                for (j, slot) in out.iter_mut().enumerate() {
                    let u: f64 = 2.0 * rng.random::<f64>() - 1.0;
                    let b = base.get(i, j);
                    *slot = if b > 0.0 {
                        b * (1.0 + amplitude * u)
                    } else {
                        0.0
                    };
                    sum += *slot;
                }
                out.iter_mut().for_each(|x| *x /= sum);
            }
        }
    }

    /// The full transition matrix `P(t)`.
    pub fn matrix_at(&self, t: u64) -> Matrix {
        let k = self.sign.size();
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            self.row_into(t, i, &mut data[i * k..(i + 1) * k]);
        }
        Matrix::new(k, k, data).expect("valid dimensions")
    }
}

/// Draws an index from a probability vector, never returning a
/// zero-probability index.
fn categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = j;
            if u < acc {
                return j;
            }
        }
    }
    last_positive
}

/// Samples `i_0 ~ p0`, then `i_(t+1) ~ row i_t of P(t)`. The result is
/// always admissible for the schedule's sign matrix.
pub fn sample_trajectory(
    schedule: &TransitionSchedule,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<Word> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let k = schedule.sign.size();
    let mut row = vec![0.0; k];
    let mut word = Vec::with_capacity(steps);
    let mut state = categorical(&schedule.initial, rng);
    word.push(state);
    for t in 1..steps {
        schedule.row_into((t - 1) as u64, state, &mut row);
        state = categorical(&row, rng);
        word.push(state);
    }
    Ok(Word::from_zero_based(word))
}

/// Finite-horizon Lyapunov exponent of a single path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovValue {
    Finite(f64),
    /// The product became the exact zero matrix.
    Collapsed,
}

/// `(1/n) log ‖S_{i0} ... S_{i(n-1)}‖` (natural log, spectral norm).
///
/// The running product is rescaled to unit max-entry after every factor and
/// the scales are accumulated in log space, so long words neither overflow
/// nor underflow.
pub fn lyapunov_along(word: &Word, sys: &MatrixSystem) -> Result<LyapunovValue> {
    word.check_alphabet(sys.alphabet())?;
    let symbols = word.symbols();
    let (&first, rest) = symbols.split_first().ok_or(Error::EmptyWord)?;
    let d = sys.dim();
    let mats = sys.matrices();

    let mut prod = mats[first].clone();
    let mut scratch = Matrix::zeros(d, d);
    let mut log_scale = 0.0;
    let renormalize = |m: &mut Matrix, log_scale: &mut f64| -> bool {
        let s = m.max_abs();
        if s == 0.0 {
            return false;
        }
        *log_scale += s.ln();
        m.as_mut_slice().iter_mut().for_each(|x| *x /= s);
        true
    };
    if !renormalize(&mut prod, &mut log_scale) {
        return Ok(LyapunovValue::Collapsed);
    }
    for &s in rest {
        mul_into(&prod, &mats[s], scratch.as_mut_slice());
        std::mem::swap(&mut prod, &mut scratch);
        if !renormalize(&mut prod, &mut log_scale) {
            return Ok(LyapunovValue::Collapsed);
        }
    }
    let total = log_scale + prod.operator_norm().ln();
    Ok(LyapunovValue::Finite(total / symbols.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Summary {
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub steps: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub rng: String,
    /// Finite per-trajectory estimates, in trajectory order.
    pub values: Vec<f64>,
    /// Indices of trajectories whose product collapsed to zero.
    pub collapsed: Vec<usize>,
    pub summary: Option<Summary>,
}

/// Independent trajectories, one seeded stream each, reduced in index
/// order so serial and parallel runs agree bit for bit.
pub fn monte_carlo_lyapunov(
    sys: &MatrixSystem,
    schedule: &TransitionSchedule,
    trajectories: usize,
    steps: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if trajectories == 0 || steps == 0 {
        return Err(Error::InvalidArgument(
            "trajectories and steps must be at least 1".into(),
        ));
    }
    if schedule.sign() != sys.sign() {
        return Err(Error::InvalidSchedule(
            "schedule sign matrix differs from the system's".into(),
        ));
    }
    let per_path: Vec<LyapunovValue> = (0..trajectories)
        .into_par_iter()
        .map(|j| {
            let mut rng = trajectory_rng(seed, j as u64);
            let word = sample_trajectory(schedule, steps, &mut rng)?;
            lyapunov_along(&word, sys)
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(trajectories);
    let mut collapsed = Vec::new();
    for (j, v) in per_path.into_iter().enumerate() {
        match v {
            LyapunovValue::Finite(x) => values.push(x),
            LyapunovValue::Collapsed => collapsed.push(j),
        }
    }
    let summary = Summary::of(&values);
    Ok(LyapunovEstimate {
        steps,
        trajectories,
        seed,
        rng: RNG_CONTRACT.to_string(),
        values,
        collapsed,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryVector {
    pub p: Vec<f64>,
    /// `‖pP - p‖_∞`
    pub residual: f64,
}

fn left_residual(p: &[f64], m: &Matrix) -> f64 {
    let k = p.len();
    (0..k)
        .map(|j| ((0..k).map(|i| p[i] * m.get(i, j)).sum::<f64>() - p[j]).abs())
        .fold(0.0, f64::max)
}

/// Solves `p(P - I) = 0`, `sum p = 1` by Gaussian elimination with partial
/// pivoting, replacing the last balance equation by the normalization.
fn direct_stationary(m: &Matrix) -> Option<Vec<f64>> {
    let k = m.rows();
    // rows of the system are the columns of (P - I)^T
    let mut a = vec![vec![0.0; k + 1]; k];
    for (j, row) in a.iter_mut().enumerate().take(k - 1) {
        for i in 0..k {
            row[i] = m.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[k - 1] = vec![1.0; k + 1];
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Perron vector of an irreducible stochastic matrix: `pP = p`, `sum p = 1`,
/// all entries positive.
///
/// Power iteration runs on the lazy chain `(I + P) / 2`, which has the same
/// stationary vector and no periodicity. If it has not reached the residual
/// tolerance within its iteration budget, a direct linear solve finishes the
/// job.
pub fn stationary_distribution(p_matrix: &Matrix) -> Result<StationaryVector> {
    let sign = support_of(p_matrix)?;
    check_stochastic(p_matrix, &sign)?;
    if !sign.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let k = sign.size();
    let mut p = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..100_000 {
        for (j, slot) in next.iter_mut().enumerate() {
            let flow: f64 = (0..k).map(|i| p[i] * p_matrix.get(i, j)).sum();
            *slot = 0.5 * (p[j] + flow);
        }
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        let delta = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut p, &mut next);
        if delta <= f64::EPSILON * 0.25 {
            break;
        }
    }
    let mut residual = left_residual(&p, p_matrix);
    if residual > STATIONARY_TOLERANCE {
        if let Some(q) = direct_stationary(p_matrix) {
            let r = left_residual(&q, p_matrix);
            if r < residual {
                p = q;
                residual = r;
            }
        }
    }
    if residual > STATIONARY_TOLERANCE || p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::StationaryNotConverged { residual });
    }
    Ok(StationaryVector { p, residual })
}

/// Probability of the cylinder `[j0, ..., j(m-1)]` under the stationary
/// Markov measure: `p_{j0} * P[j0][j1] * ... * P[j(m-2)][j(m-1)]`.
pub fn cylinder_measure(p: &StationaryVector, p_matrix: &Matrix, word: &Word) -> Result<f64> {
    word.check_alphabet(p.p.len())?;
    let s = word.symbols();
    let (&first, _) = s.split_first().ok_or(Error::EmptyWord)?;
    Ok(s.windows(2)
        .fold(p.p[first], |acc, w| acc * p_matrix.get(w[0], w[1])))
}
