//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when `stability` ends `Undecided`, 1 on any
//! error (diagnostics go to standard error).

pub mod report;
pub mod system_file;

use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::jsr::{
    decide_uniform_stability, estimate_radius, SearchOptions, StabilityStatus, DEFAULT_MARGIN,
    DEFAULT_MAX_LEN, DEFAULT_NODE_CAP, DEFAULT_TARGET_GAP,
};
use crate::lift::{build_lift, selector};
use crate::linalg::Norm;
use crate::markov_sim::{monte_carlo_lyapunov, Generator};
use crate::subshift::{collect_words, WordMode};

use report::{
    bounds_csv, InputEcho, LiftResult, Report, SimulateResult, StabilityResult, WordsResult,
};
use system_file::{read_system, LoadedSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "chainstab",
    version,
    about = "Stability of matrix products driven by Markov chains"
)]
pub struct Cli {
    /// Cap on worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide uniform exponential stability from spectral-radius bounds.
    Stability(BoundsArgs),
    /// Print the lifted {0,1}-selector system.
    Lift(InputArg),
    /// List words of a given length.
    Words(WordsArgs),
    /// Monte Carlo estimate of the top Lyapunov exponent.
    Simulate(SimulateArgs),
    /// Per-length lower and upper bounds, for plotting.
    RadiusTrace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// System file (JSON); `-` reads standard input.
    pub system: String,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub input: InputArg,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long, default_value_t = DEFAULT_TARGET_GAP)]
    pub gap: f64,
    /// Tree-node cap per sweep.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub cap: u64,
    #[arg(long, value_enum, default_value_t = NormArg::Spectral)]
    pub norm: NormArg,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct WordsArgs {
    #[command(flatten)]
    pub input: InputArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Periodic)]
    pub mode: ModeArg,
    #[arg(long)]
    pub len: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArg,
    #[arg(long, default_value_t = 100)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Spectral,
    Frobenius,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Norm {
        match n {
            NormArg::Spectral => Norm::Spectral,
            NormArg::Frobenius => Norm::Frobenius,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Free,
    Admissible,
    Periodic,
}

impl From<ModeArg> for WordMode {
    fn from(m: ModeArg) -> WordMode {
        match m {
            ModeArg::Free => WordMode::Free,
            ModeArg::Admissible => WordMode::Admissible,
            ModeArg::Periodic => WordMode::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// What a command produced: text for standard output and an exit code.
struct Outcome {
    body: String,
    code: i32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };

    let result = match cli.threads {
        Some(0) => Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        )),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };

    match result {
        Ok(outcome) => {
            if let Err(e) = out.write_all(outcome.body.as_bytes()) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn emit<T: Serialize>(
    command: &'static str,
    parameters: serde_json::Value,
    loaded: &LoadedSystem,
    result: T,
    started: Instant,
) -> String {
    let mut report = Report::new(
        command,
        parameters,
        InputEcho::new(loaded.to_file()),
        result,
    );
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    let mut body = report.to_json();
    body.push('\n');
    body
}

fn search_options(a: &BoundsArgs) -> Result<SearchOptions> {
    if !(a.margin >= 0.0 && a.margin.is_finite()) {
        return Err(Error::InvalidArgument(
            "--margin must be a nonnegative number".into(),
        ));
    }
    if a.cap == 0 {
        return Err(Error::InvalidArgument("--cap must be at least 1".into()));
    }
    Ok(SearchOptions {
        norm: a.norm.into(),
        node_cap: a.cap,
        margin: a.margin,
        prune: true,
    })
}

fn bounds_parameters(a: &BoundsArgs) -> serde_json::Value {
    json!({
        "max_len": a.max_len,
        "gap": a.gap,
        "cap": a.cap,
        "norm": Norm::from(a.norm),
        "margin": a.margin,
    })
}

fn dispatch(command: &Command) -> Result<Outcome> {
    let started = Instant::now();
    match command {
        Command::Stability(a) => {
            let loaded = read_system(&a.input.system)?;
            let opts = search_options(a)?;
            let lift = build_lift(&loaded.system);
            let bounds = estimate_radius(&loaded.system, &lift, a.max_len, a.gap, &opts)?;
            let verdict = decide_uniform_stability(&bounds, a.margin);
            let code = match verdict.status {
                StabilityStatus::Undecided => EXIT_UNDECIDED,
                _ => EXIT_OK,
            };
            let body = emit(
                "stability",
                bounds_parameters(a),
                &loaded,
                StabilityResult { verdict, bounds },
                started,
            );
            Ok(Outcome { body, code })
        }
        Command::RadiusTrace(t) => {
            let a = &t.bounds;
            let loaded = read_system(&a.input.system)?;
            let opts = search_options(a)?;
            let lift = build_lift(&loaded.system);
            let bounds = estimate_radius(&loaded.system, &lift, a.max_len, a.gap, &opts)?;
            let body = match t.format {
                Format::Csv => bounds_csv(&bounds),
                Format::Json => emit(
                    "radius-trace",
                    bounds_parameters(a),
                    &loaded,
                    bounds,
                    started,
                ),
            };
            Ok(Outcome {
                body,
                code: EXIT_OK,
            })
        }
        Command::Lift(a) => {
            let loaded = read_system(&a.system)?;
            let sys = &loaded.system;
            let lift = build_lift(sys);
            let selectors = (0..sys.alphabet())
                .map(|k| {
                    selector(sys.sign(), k)
                        .to_rows()
                        .into_iter()
                        .map(|row| row.into_iter().map(|x| x as u8).collect())
                        .collect()
                })
                .collect();
            let result = LiftResult {
                alphabet: lift.alphabet(),
                base_dim: lift.base_dim(),
                lifted_dim: lift.dim(),
                selectors,
                lifted: lift.matrices().iter().map(|m| m.to_rows()).collect(),
            };
            let body = emit("lift", json!({}), &loaded, result, started);
            Ok(Outcome {
                body,
                code: EXIT_OK,
            })
        }
        Command::Words(a) => {
            let loaded = read_system(&a.input.system)?;
            let mode: WordMode = a.mode.into();
            let words = collect_words(loaded.system.sign(), a.len, mode, a.cap)?;
            let result = WordsResult {
                mode,
                length: a.len,
                count: words.len(),
                words,
            };
            let params = json!({ "mode": mode, "len": a.len, "cap": a.cap });
            let body = emit("words", params, &loaded, result, started);
            Ok(Outcome {
                body,
                code: EXIT_OK,
            })
        }
        Command::Simulate(a) => {
            let loaded = read_system(&a.input.system)?;
            let schedule = loaded.schedule_or_default()?;
            let estimate =
                monte_carlo_lyapunov(&loaded.system, &schedule, a.trajectories, a.steps, a.seed)?;
            let schedule_mode = match (&loaded.schedule, schedule.generator()) {
                (None, _) => "default_uniform",
                (_, Generator::Constant(_)) => "constant",
                (_, Generator::PeriodicList(_)) => "periodic_list",
                (_, Generator::RandomPerturbed { .. }) => "random_perturbed",
            };
            let params = json!({
                "trajectories": a.trajectories,
                "steps": a.steps,
                "seed": a.seed,
            });
            let result = SimulateResult {
                schedule_mode,
                estimate,
            };
            let body = emit("simulate", params, &loaded, result, started);
            Ok(Outcome {
                body,
                code: EXIT_OK,
            })
        }
    }
}
