//! Lower and upper bounds on the constrained joint spectral radius, and the
//! uniform-stability decision built on them.
//!
//! * Lower bound at length `n`: the largest `ρ(S_w)^(1/n)` over periodically
//!   extendable words `w`. Any such value is a lower bound for the radius.
//! * Upper bound at length `n`: the largest `‖S^(w)‖^(1/n)` over all free
//!   words of the lifted system. The lifted family is unconstrained, so its
//!   norm sequence is submultiplicative and every `n` gives a valid upper
//!   bound. Non-admissible words have zero lifted products and drop out.
//!
//! Both sweeps split the word tree by first symbol and run the parts in
//! parallel. Per-part results are reduced by value, then by the
//! lexicographically smaller word, so the output does not depend on thread
//! scheduling. The upper sweep prunes each part against its own incumbent,
//! seeded from a greedy word, which keeps the visited-node counts
//! reproducible as well.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{LiftedSystem, MatrixSystem};
use crate::linalg::{mul_into, Matrix, Norm};
use crate::subshift::{is_necklace, Word};

pub const DEFAULT_MARGIN: f64 = 1e-9;
pub const DEFAULT_TARGET_GAP: f64 = 1e-3;
pub const DEFAULT_MAX_LEN: usize = 12;
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// Relative slack on branch-and-bound estimates, covering rounding in the
/// computed norms.
const PRUNE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub norm: Norm,
    /// Maximum number of tree nodes a single sweep may visit.
    pub node_cap: u64,
    /// Rooted radii at or above `1 + margin` are recorded as unstable.
    pub margin: f64,
    /// Branch-and-bound pruning in the upper sweep.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            norm: Norm::Spectral,
            node_cap: DEFAULT_NODE_CAP,
            margin: DEFAULT_MARGIN,
            prune: true,
        }
    }
}

/// A word together with its n-th rooted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub word: Word,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    /// `0` when there are no periodically extendable words of this length.
    pub value: f64,
    pub witness: Option<Word>,
    /// Lexicographically smallest periodic word whose rooted radius is at
    /// least `1 + margin`, if any.
    pub first_unstable: Option<Witness>,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    pub witness: Word,
    pub nodes: u64,
}

/// n-th root with exact small cases.
fn root(x: f64, n: usize) -> f64 {
    match n {
        1 => x,
        2 => x.sqrt(),
        _ => x.powf(1.0 / n as f64),
    }
}

struct NodeBudget<'a> {
    used: &'a AtomicU64,
    cap: u64,
}

impl NodeBudget<'_> {
    fn take(&self) -> Result<()> {
        let used = self.used.fetch_add(1, Ordering::Relaxed) + 1;
        if used > self.cap {
            return Err(Error::CapExceeded {
                cap: self.cap,
                produced: used - 1,
            });
        }
        Ok(())
    }
}

/// `(value, word)` with the larger value winning and ties going to the
/// lexicographically smaller word.
fn better(candidate: &(f64, Vec<usize>), incumbent: &Option<(f64, Vec<usize>)>) -> bool {
    match incumbent {
        None => true,
        Some((v, w)) => candidate.0 > *v || (candidate.0 == *v && candidate.1 < *w),
    }
}

#[derive(Default)]
struct LowerPart {
    best: Option<(f64, Vec<usize>)>,
    first_unstable: Option<(f64, Vec<usize>)>,
}

struct LowerWalk<'a> {
    sys: &'a MatrixSystem,
    n: usize,
    threshold: f64,
    budget: NodeBudget<'a>,
    word: Vec<usize>,
    products: Vec<Matrix>,
    part: LowerPart,
}

impl LowerWalk<'_> {
    fn descend(&mut self, depth: usize) -> Result<()> {
        self.budget.take()?;
        if depth == self.n {
            return self.leaf();
        }
        let last = self.word[depth - 1];
        let sign = self.sys.sign();
        for next in 0..self.sys.alphabet() {
            if !sign.allows(last, next) {
                continue;
            }
            let (head, tail) = self.products.split_at_mut(depth);
            mul_into(
                &head[depth - 1],
                &self.sys.matrices()[next],
                tail[0].as_mut_slice(),
            );
            self.word[depth] = next;
            self.descend(depth + 1)?;
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<()> {
        let first = self.word[0];
        let last = self.word[self.n - 1];
        if !self.sys.sign().allows(last, first) || !is_necklace(&self.word) {
            return Ok(());
        }
        let rho = self.products[self.n - 1].spectral_radius()?;
        let value = root(rho, self.n);
        let cand = (value, self.word.clone());
        if better(&cand, &self.part.best) {
            self.part.best = Some(cand.clone());
        }
        if value >= self.threshold && self.part.first_unstable.is_none() {
            self.part.first_unstable = Some(cand);
        }
        Ok(())
    }
}

/// Largest rooted spectral radius over periodically extendable words of
/// length `n`. Only necklaces (lexicographically least rotations) are
/// evaluated, since rotations share their spectral radius.
pub fn lower_bound_at(sys: &MatrixSystem, n: usize, opts: &SearchOptions) -> Result<LowerBound> {
    if n == 0 {
        return Err(Error::InvalidArgument("length must be at least 1".into()));
    }
    let used = AtomicU64::new(0);
    let d = sys.dim();
    let parts: Vec<LowerPart> = (0..sys.alphabet())
        .into_par_iter()
        .map(|first| {
            let mut walk = LowerWalk {
                sys,
                n,
                threshold: 1.0 + opts.margin,
                budget: NodeBudget {
                    used: &used,
                    cap: opts.node_cap,
                },
                word: vec![0; n],
                products: vec![Matrix::zeros(d, d); n],
                part: LowerPart::default(),
            };
            walk.word[0] = first;
            walk.products[0] = sys.matrices()[first].clone();
            walk.descend(1)?;
            Ok(walk.part)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut first_unstable = None;
    for part in parts {
        if let Some(c) = part.best {
            if better(&c, &best) {
                best = Some(c);
            }
        }
        if first_unstable.is_none() {
            first_unstable = part.first_unstable;
        }
    }
    let (value, witness) = match best {
        Some((v, w)) => (v, Some(Word::from_zero_based(w))),
        None => (0.0, None),
    };
    Ok(LowerBound {
        value,
        witness,
        first_unstable: first_unstable.map(|(value, w)| Witness {
            word: Word::from_zero_based(w),
            value,
        }),
        nodes: used.load(Ordering::Relaxed),
    })
}

struct UpperWalk<'a> {
    lift: &'a LiftedSystem,
    n: usize,
    norm: Norm,
    prune: bool,
    /// `max_k ‖S^(k)‖`
    step_bound: f64,
    incumbent: f64,
    budget: NodeBudget<'a>,
    word: Vec<usize>,
    products: Vec<Matrix>,
    best: Option<(f64, Vec<usize>)>,
}

impl UpperWalk<'_> {
    fn visit(&mut self, depth: usize) -> Result<()> {
        self.budget.take()?;
        let prod = &self.products[depth - 1];
        if prod.is_zero() {
            // every extension is zero too; its smallest word pads with symbol 1
            let mut w = self.word[..depth].to_vec();
            w.resize(self.n, 0);
            let cand = (0.0, w);
            if better(&cand, &self.best) {
                self.best = Some(cand);
            }
            return Ok(());
        }
        let norm = self.norm.of(prod);
        if depth == self.n {
            let cand = (norm, self.word.clone());
            if better(&cand, &self.best) {
                self.best = Some(cand);
            }
            self.incumbent = self.incumbent.max(norm);
            return Ok(());
        }
        if self.prune {
            let remaining = (self.n - depth) as i32;
            let bound = norm * self.step_bound.powi(remaining) * (1.0 + PRUNE_SLACK);
            if bound < self.incumbent {
                return Ok(());
            }
        }
        for next in 0..self.lift.alphabet() {
            let (head, tail) = self.products.split_at_mut(depth);
            mul_into(
                &head[depth - 1],
                &self.lift.matrices()[next],
                tail[0].as_mut_slice(),
            );
            self.word[depth] = next;
            self.visit(depth + 1)?;
        }
        Ok(())
    }
}

/// Norm of the lifted product along a greedily chosen word; any full-length
/// word gives a valid starting incumbent.
fn greedy_incumbent(lift: &LiftedSystem, n: usize, norm: Norm) -> f64 {
    let mats = lift.matrices();
    let mut best: Option<(f64, Matrix)> = None;
    for m in mats {
        let v = norm.of(m);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, m.clone()));
        }
    }
    let Some((mut value, mut prod)) = best else {
        return 0.0;
    };
    for _ in 1..n {
        let mut step: Option<(f64, Matrix)> = None;
        for m in mats {
            let p = prod.mat_mul(m).expect("lifted matrices share a dimension");
            let v = norm.of(&p);
            if step.as_ref().is_none_or(|(b, _)| v > *b) {
                step = Some((v, p));
            }
        }
        (value, prod) = step.expect("alphabet is nonempty");
    }
    value
}

/// Largest rooted lifted-product norm over all free words of length `n`,
/// found by depth-first branch and bound.
pub fn upper_bound_at(lift: &LiftedSystem, n: usize, opts: &SearchOptions) -> Result<UpperBound> {
    if n == 0 {
        return Err(Error::InvalidArgument("length must be at least 1".into()));
    }
    let used = AtomicU64::new(0);
    let seed = if opts.prune {
        greedy_incumbent(lift, n, opts.norm)
    } else {
        0.0
    };
    let step_bound = lift
        .matrices()
        .iter()
        .map(|m| opts.norm.of(m))
        .fold(0.0, f64::max);
    let dim = lift.dim();

    let parts: Vec<Option<(f64, Vec<usize>)>> = (0..lift.alphabet())
        .into_par_iter()
        .map(|first| {
            let mut walk = UpperWalk {
                lift,
                n,
                norm: opts.norm,
                prune: opts.prune,
                step_bound,
                incumbent: seed,
                budget: NodeBudget {
                    used: &used,
                    cap: opts.node_cap,
                },
                word: vec![0; n],
                products: vec![Matrix::zeros(dim, dim); n],
                best: None,
            };
            walk.word[0] = first;
            walk.products[0] = lift.matrices()[first].clone();
            walk.visit(1)?;
            Ok(walk.best)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, Vec<usize>)> = None;
    for c in parts.into_iter().flatten() {
        if better(&c, &best) {
            best = Some(c);
        }
    }
    let (norm, word) = best.expect("the maximizing word is never pruned");
    Ok(UpperBound {
        value: root(norm, n),
        witness: Word::from_zero_based(word),
        nodes: used.load(Ordering::Relaxed),
    })
}

/// One row of the bounds trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRecord {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: Option<Word>,
    pub upper_witness: Word,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unstable_witness: Option<Witness>,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub records: Vec<LengthRecord>,
    pub best_lower: f64,
    pub best_lower_witness: Option<Word>,
    pub best_upper: f64,
    pub best_upper_length: usize,
    pub best_upper_witness: Word,
    pub target_gap: f64,
    /// Whether the sweep stopped because the gap target was met.
    pub gap_reached: bool,
}

impl SpectralBounds {
    pub fn gap(&self) -> f64 {
        self.best_upper - self.best_lower
    }

    pub fn max_length(&self) -> usize {
        self.records.last().map_or(0, |r| r.n)
    }

    /// Width `best_upper - best_lower` using only records up to length `n`.
    pub fn gap_at(&self, n: usize) -> Option<f64> {
        let upto: Vec<_> = self.records.iter().filter(|r| r.n <= n).collect();
        if upto.is_empty() {
            return None;
        }
        let lo = upto.iter().map(|r| r.lower).fold(0.0, f64::max);
        let hi = upto.iter().map(|r| r.upper).fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    }
}

/// Runs both sweeps for `n = 1..=max_n`, stopping early once
/// `best_upper - best_lower <= target_gap`.
pub fn estimate_radius(
    sys: &MatrixSystem,
    lift: &LiftedSystem,
    max_n: usize,
    target_gap: f64,
    opts: &SearchOptions,
) -> Result<SpectralBounds> {
    if max_n == 0 {
        return Err(Error::InvalidArgument(
            "max length must be at least 1".into(),
        ));
    }
    if target_gap.is_nan() || target_gap <= 0.0 {
        return Err(Error::InvalidArgument("target gap must be positive".into()));
    }
    let mut records = Vec::new();
    let mut best_lower = 0.0;
    let mut best_lower_witness = None;
    let mut best_upper = f64::INFINITY;
    let mut best_upper_length = 0;
    let mut best_upper_witness = Word::default();
    let mut gap_reached = false;

    for n in 1..=max_n {
        let lo = lower_bound_at(sys, n, opts)?;
        let hi = upper_bound_at(lift, n, opts)?;
        if lo.witness.is_some() && lo.value > best_lower {
            best_lower = lo.value;
            best_lower_witness = lo.witness.clone();
        }
        if hi.value < best_upper {
            best_upper = hi.value;
            best_upper_length = n;
            best_upper_witness = hi.witness.clone();
        }
        records.push(LengthRecord {
            n,
            lower: lo.value,
            upper: hi.value,
            lower_witness: lo.witness,
            upper_witness: hi.witness,
            unstable_witness: lo.first_unstable,
            nodes: lo.nodes + hi.nodes,
        });
        if best_upper - best_lower <= target_gap {
            gap_reached = true;
            break;
        }
    }
    Ok(SpectralBounds {
        records,
        best_lower,
        best_lower_witness,
        best_upper,
        best_upper_length,
        best_upper_witness,
        target_gap,
        gap_reached,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityStatus {
    UniformlyStable,
    NotUniformlyStable,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Upper bound below one, attained at the given length.
    UpperBound {
        value: f64,
        length: usize,
        word: Word,
    },
    /// A closed admissible path whose rooted spectral radius is at least one.
    UnstableWord { word: Word, rooted_radius: f64 },
    /// Neither side is conclusive.
    Bracket { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    pub certificate: Certificate,
    pub max_length_searched: usize,
}

/// Stable when `best_upper < 1 - margin`; unstable when a periodic witness
/// has rooted radius `>= 1 + margin`; undecided otherwise.
pub fn decide_uniform_stability(bounds: &SpectralBounds, margin: f64) -> StabilityVerdict {
    let max_length_searched = bounds.max_length();
    let threshold = 1.0 + margin;
    let unstable = bounds
        .records
        .iter()
        .filter_map(|r| r.unstable_witness.as_ref())
        .find(|w| w.value >= threshold)
        .cloned()
        .or_else(|| match &bounds.best_lower_witness {
            Some(word) if bounds.best_lower >= threshold => Some(Witness {
                word: word.clone(),
                value: bounds.best_lower,
            }),
            _ => None,
        });

    let (status, certificate) = if bounds.best_upper < 1.0 - margin {
        (
            StabilityStatus::UniformlyStable,
            Certificate::UpperBound {
                value: bounds.best_upper,
                length: bounds.best_upper_length,
                word: bounds.best_upper_witness.clone(),
            },
        )
    } else if let Some(w) = unstable {
        (
            StabilityStatus::NotUniformlyStable,
            Certificate::UnstableWord {
                word: w.word,
                rooted_radius: w.value,
            },
        )
    } else {
        (
            StabilityStatus::Undecided,
            Certificate::Bracket {
                lower: bounds.best_lower,
                upper: bounds.best_upper,
            },
        )
    };
    StabilityVerdict {
        status,
        certificate,
        max_length_searched,
    }
}
