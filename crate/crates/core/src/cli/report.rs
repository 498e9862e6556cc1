//! Report envelopes written to standard output.
//!
//! Everything except `wall_clock_seconds` is a pure function of the tool
//! version, the input file and the command-line parameters.

use serde::Serialize;
use serde_json::Value;

use super::system_file::{input_hash, SystemFile};
use crate::jsr::{SpectralBounds, StabilityVerdict};
use crate::markov_sim::LyapunovEstimate;
use crate::subshift::{Word, WordMode};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub sha256: String,
    pub system: SystemFile,
}

impl InputEcho {
    pub fn new(system: SystemFile) -> Self {
        InputEcho {
            sha256: input_hash(&system),
            system,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub parameters: Value,
    pub input: InputEcho,
    pub result: T,
    pub wall_clock_seconds: f64,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, parameters: Value, input: InputEcho, result: T) -> Self {
        Report {
            tool: ToolInfo {
                name: TOOL_NAME,
                version: TOOL_VERSION,
            },
            command,
            parameters,
            input,
            result,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityResult {
    pub verdict: StabilityVerdict,
    pub bounds: SpectralBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftResult {
    pub alphabet: usize,
    pub base_dim: usize,
    pub lifted_dim: usize,
    /// Row selectors `e_k s_k^T` as 0/1 grids.
    pub selectors: Vec<Vec<Vec<u8>>>,
    pub lifted: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WordsResult {
    pub mode: WordMode,
    pub length: usize,
    pub count: usize,
    pub words: Vec<Word>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResult {
    pub schedule_mode: &'static str,
    pub estimate: LyapunovEstimate,
}

/// Plot-friendly CSV of the per-length bounds with running best values.
pub fn bounds_csv(bounds: &SpectralBounds) -> String {
    let mut out = String::from("n,lower,upper,best_lower,best_upper,nodes\n");
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for r in &bounds.records {
        lo = lo.max(r.lower);
        hi = hi.min(r.upper);
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{}\n",
            r.n, r.lower, r.upper, lo, hi, r.nodes
        ));
    }
    out
}
