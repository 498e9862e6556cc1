//! Exponential stability of matrix-valued Markov chains whose transition
//! probabilities keep a fixed sign pattern.
//!
//! The crate decides uniform stability from spectral-radius bounds over
//! admissible words, and estimates almost-sure stability by Monte Carlo
//! Lyapunov exponents. Modules, bottom up:
//!
//! * [`linalg`]: dense matrices, norms, spectral radius, Kronecker products;
//! * [`subshift`]: sign matrices, admissible and periodic words;
//! * [`lift`]: the `{0,1}`-matrix lift turning constrained products into
//!   free ones;
//! * [`jsr`]: lower/upper radius bounds and the stability verdict;
//! * [`markov_sim`]: chain sampling, stationary measures, Lyapunov exponents;
//! * [`cli`]: system files, reports and the command-line front end.

pub mod cli;
pub mod error;
pub mod jsr;
pub mod lift;
pub mod linalg;
pub mod markov_sim;
pub mod subshift;

pub use error::{Error, Result};
pub use jsr::{
    decide_uniform_stability, estimate_radius, lower_bound_at, upper_bound_at, SearchOptions,
    SpectralBounds, StabilityStatus, StabilityVerdict,
};
pub use lift::{build_lift, LiftedSystem, MatrixSystem};
pub use linalg::{Matrix, Norm};
pub use markov_sim::{LyapunovEstimate, TransitionSchedule};
pub use subshift::{SignMatrix, Word, WordMode};
