//! Sign matrices, words over `{1, ..., K}` and the subshift they generate.
//!
//! Words are 1-based at every external boundary (parsing, display, JSON) and
//! 0-based internally.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A `K x K` matrix of zeros and ones with at least one 1 in every row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    size: usize,
    allowed: Vec<bool>,
}

impl SignMatrix {
    /// Validates a raw integer grid.
    pub fn new<R: AsRef<[u8]>>(raw: &[R]) -> Result<Self> {
        let size = raw.len();
        if size == 0 {
            return Err(Error::InvalidSignMatrix("empty matrix".into()));
        }
        let mut allowed = Vec::with_capacity(size * size);
        for (i, row) in raw.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != size {
                return Err(Error::InvalidSignMatrix(format!(
                    "row {} has {} entries, expected {size}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => allowed.push(false),
                    1 => allowed.push(true),
                    other => {
                        return Err(Error::InvalidSignMatrix(format!(
                            "entry ({}, {}) is {other}, expected 0 or 1",
                            i + 1,
                            j + 1
                        )))
                    }
                }
            }
            if !row.contains(&1) {
                return Err(Error::InvalidSignMatrix(format!(
                    "row {} has no allowed transition",
                    i + 1
                )));
            }
        }
        Ok(SignMatrix { size, allowed })
    }

    /// The all-ones sign matrix: every transition allowed.
    pub fn full(size: usize) -> Self {
        assert!(size > 0);
        SignMatrix {
            size,
            allowed: vec![true; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Whether the 0-based transition `from -> to` is allowed.
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.size + to]
    }

    pub fn entry(&self, from: usize, to: usize) -> u8 {
        self.allows(from, to) as u8
    }

    /// Number of allowed successors of `from`.
    pub fn out_degree(&self, from: usize) -> usize {
        self.row(from).iter().filter(|&&b| b).count()
    }

    fn row(&self, i: usize) -> &[bool] {
        &self.allowed[i * self.size..(i + 1) * self.size]
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|i| self.row(i).iter().map(|&b| b as u8).collect())
            .collect()
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        let forward = self.reachable_from(0, |i, j| self.allows(i, j));
        let backward = self.reachable_from(0, |i, j| self.allows(j, i));
        forward.iter().all(|&b| b) && backward.iter().all(|&b| b)
    }

    fn reachable_from(&self, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.size];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..self.size {
                if !seen[j] && edge(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }
}

pub fn validate_sign_matrix<R: AsRef<[u8]>>(raw: &[R]) -> Result<SignMatrix> {
    SignMatrix::new(raw)
}

pub fn is_irreducible(s: &SignMatrix) -> bool {
    s.is_irreducible()
}

/// Finite word over `{1, ..., K}`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn from_zero_based(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn from_one_based(symbols: &[usize], alphabet: usize) -> Result<Self> {
        symbols
            .iter()
            .map(|&s| {
                if s >= 1 && s <= alphabet {
                    Ok(s - 1)
                } else {
                    Err(Error::SymbolOutOfRange {
                        symbol: s,
                        alphabet,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Internal 0-based symbols.
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= alphabet) {
            Some(&s) => Err(Error::SymbolOutOfRange {
                symbol: s + 1,
                alphabet,
            }),
            None => Ok(()),
        }
    }

    /// Every adjacent pair is an allowed transition. Length-1 words are
    /// admissible.
    pub fn is_admissible(&self, s: &SignMatrix) -> bool {
        self.0.windows(2).all(|w| s.allows(w[0], w[1]))
    }

    /// Admissible and the wrap-around edge `last -> first` is allowed.
    pub fn is_periodically_extendable(&self, s: &SignMatrix) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(&first), Some(&last)) => self.is_admissible(s) && s.allows(last, first),
            _ => false,
        }
    }

    /// The word followed by its own first symbol.
    pub fn closed(&self) -> Word {
        let mut v = self.0.clone();
        if let Some(&f) = self.0.first() {
            v.push(f);
        }
        Word(v)
    }

    pub fn rotated(&self, by: usize) -> Word {
        let mut v = self.0.clone();
        if !v.is_empty() {
            let k = by % v.len();
            v.rotate_left(k);
        }
        Word(v)
    }

    /// True when no cyclic rotation is lexicographically smaller.
    pub fn is_necklace(&self) -> bool {
        is_necklace(&self.0)
    }
}

pub(crate) fn is_necklace(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|r| {
        for i in 0..n {
            let a = w[i];
            let b = w[(i + r) % n];
            if a != b {
                return a < b;
            }
        }
        true
    })
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        if v.contains(&0) {
            return Err(serde::de::Error::custom("word symbols are 1-based"));
        }
        Ok(Word(v.into_iter().map(|s| s - 1).collect()))
    }
}

pub fn is_admissible(word: &Word, s: &SignMatrix) -> bool {
    word.is_admissible(s)
}

pub fn is_periodically_extendable(word: &Word, s: &SignMatrix) -> bool {
    word.is_periodically_extendable(s)
}

/// Which words an enumeration yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordMode {
    /// Every word in `{1..K}^n`.
    Free,
    /// Words whose adjacent transitions are all allowed.
    Admissible,
    /// Admissible words whose wrap-around transition is also allowed.
    Periodic,
}

impl std::str::FromStr for WordMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(WordMode::Free),
            "admissible" => Ok(WordMode::Admissible),
            "periodic" => Ok(WordMode::Periodic),
            other => Err(Error::InvalidArgument(format!(
                "unknown word mode `{other}`"
            ))),
        }
    }
}

/// Lexicographic depth-first walk over length-`n` words.
///
/// In admissible and periodic mode the walk prunes at the first forbidden
/// edge. Once `cap` words have been yielded, the next call yields a single
/// `CapExceeded` error and the iterator is exhausted.
#[derive(Debug, Clone)]
pub struct WordIter<'a> {
    sign: &'a SignMatrix,
    len: usize,
    mode: WordMode,
    current: Vec<usize>,
    started: bool,
    finished: bool,
    produced: u64,
    cap: u64,
}

impl<'a> WordIter<'a> {
    fn step_allowed(&self, prev: Option<usize>, next: usize) -> bool {
        match (self.mode, prev) {
            (WordMode::Free, _) | (_, None) => true,
            (_, Some(p)) => self.sign.allows(p, next),
        }
    }

    fn first_allowed_from(&self, prev: Option<usize>, from: usize) -> Option<usize> {
        (from..self.sign.size()).find(|&c| self.step_allowed(prev, c))
    }

    /// Extends `current` greedily to full length. Always succeeds because
    /// every row of the sign matrix has an allowed successor.
    fn fill(&mut self) {
        while self.current.len() < self.len {
            let prev = self.current.last().copied();
            let c = self
                .first_allowed_from(prev, 0)
                .expect("validated sign rows are never empty");
            self.current.push(c);
        }
    }

    /// Moves to the lexicographically next word of the tree.
    fn advance(&mut self) -> bool {
        while let Some(last) = self.current.pop() {
            let prev = self.current.last().copied();
            if let Some(c) = self.first_allowed_from(prev, last + 1) {
                self.current.push(c);
                self.fill();
                return true;
            }
        }
        false
    }

    fn accepts(&self) -> bool {
        match self.mode {
            WordMode::Periodic => {
                let (f, l) = (self.current[0], self.current[self.len - 1]);
                self.sign.allows(l, f)
            }
            _ => true,
        }
    }
}

impl Iterator for WordIter<'_> {
    type Item = Result<Word>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let mut have = if self.started {
            self.advance()
        } else {
            self.started = true;
            self.fill();
            true
        };
        while have && !self.accepts() {
            have = self.advance();
        }
        if !have {
            self.finished = true;
            return None;
        }
        if self.produced >= self.cap {
            self.finished = true;
            return Some(Err(Error::CapExceeded {
                cap: self.cap,
                produced: self.produced,
            }));
        }
        self.produced += 1;
        Some(Ok(Word(self.current.clone())))
    }
}

/// Lazily enumerates words of length `n` in lexicographic order.
pub fn enumerate_words(s: &SignMatrix, n: usize, mode: WordMode, cap: u64) -> Result<WordIter<'_>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "word length must be at least 1".into(),
        ));
    }
    Ok(WordIter {
        sign: s,
        len: n,
        mode,
        current: Vec::with_capacity(n),
        started: false,
        finished: false,
        produced: 0,
        cap,
    })
}

/// Collects [`enumerate_words`], failing if the cap is hit.
pub fn collect_words(s: &SignMatrix, n: usize, mode: WordMode, cap: u64) -> Result<Vec<Word>> {
    enumerate_words(s, n, mode, cap)?.collect()
}

/// Word count, or `Saturated` if it does not fit in a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WordCount {
    Exact(u64),
    Saturated,
}

/// `|W^n|`: sum of the entries of `S^(n-1)`, by iterated matrix-vector
/// products on the all-ones vector.
pub fn count_admissible(s: &SignMatrix, n: usize) -> Result<WordCount> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "word length must be at least 1".into(),
        ));
    }
    let k = s.size();
    // paths[i] = number of admissible words of the current length starting at i
    let mut paths = vec![1u64; k];
    for _ in 1..n {
        let mut next = vec![0u64; k];
        for (i, slot) in next.iter_mut().enumerate() {
            for j in 0..k {
                if s.allows(i, j) {
                    match slot.checked_add(paths[j]) {
                        Some(v) => *slot = v,
                        None => return Ok(WordCount::Saturated),
                    }
                }
            }
        }
        paths = next;
    }
    Ok(paths
        .iter()
        .try_fold(0u64, |acc, &x| acc.checked_add(x))
        .map_or(WordCount::Saturated, WordCount::Exact))
}
