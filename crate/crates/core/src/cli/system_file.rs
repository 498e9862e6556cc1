//! The JSON system file.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "matrices": [[[2.0]], [[0.3333333333333333]]],
//!   "sign_matrix": [[0, 1], [1, 0]],
//!   "initial_distribution": [0.5, 0.5],
//!   "schedule": {"mode": "random_perturbed", "base": [[0, 1], [1, 0]],
//!                "amplitude": 0.5, "seed": 7}
//! }
//! ```
//!
//! Schedule modes: `constant` (needs `base`), `periodic_list` (needs
//! `matrices`), `random_perturbed` (needs `base` and `amplitude`; `seed`
//! defaults to 0). `initial_distribution` defaults to uniform.
//!
//! Diagnostics carry a JSON path such as `$.matrices[1][0][2]`. Paths use
//! 0-based array indices; messages name rows and states 1-based.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lift::MatrixSystem;
use crate::linalg::Matrix;
use crate::markov_sim::{check_stochastic, Generator, TransitionSchedule, STOCHASTIC_TOLERANCE};
use crate::subshift::SignMatrix;

/// Serialized form of a system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub dimension: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub sign_matrix: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Validated contents of a system file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSystem {
    pub system: MatrixSystem,
    /// As given in the file; `None` means uniform.
    pub initial: Option<Vec<f64>>,
    pub schedule: Option<TransitionSchedule>,
}

impl LoadedSystem {
    pub fn initial_or_uniform(&self) -> Vec<f64> {
        let k = self.system.alphabet();
        self.initial
            .clone()
            .unwrap_or_else(|| vec![1.0 / k as f64; k])
    }

    /// The file's schedule, or a homogeneous chain uniform over allowed
    /// successors when none is given.
    pub fn schedule_or_default(&self) -> Result<TransitionSchedule> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => {
                let uniform = TransitionSchedule::uniform(self.system.sign());
                let Generator::Constant(p) = uniform.generator().clone() else {
                    unreachable!("uniform schedules are constant")
                };
                TransitionSchedule::new(
                    self.system.sign().clone(),
                    self.initial_or_uniform(),
                    Generator::Constant(p),
                )
            }
        }
    }

    pub fn to_file(&self) -> SystemFile {
        emit_system(self)
    }
}

fn at(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::schema(path, message)
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| at(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| at(path, "expected an array"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| at(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(at(path, "number is not finite"));
    }
    Ok(x)
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| at(path, "expected a nonnegative integer"))
}

fn square_matrix(v: &Value, size: usize, path: &str) -> Result<Matrix> {
    let rows = as_array(v, path)?;
    if rows.len() != size {
        return Err(at(
            path,
            format!("expected {size} rows, found {}", rows.len()),
        ));
    }
    let mut data = Vec::with_capacity(size * size);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let entries = as_array(row, &rpath)?;
        if entries.len() != size {
            return Err(at(
                &rpath,
                format!("expected {size} entries, found {}", entries.len()),
            ));
        }
        for (j, e) in entries.iter().enumerate() {
            data.push(as_f64(e, &format!("{rpath}[{j}]"))?);
        }
    }
    Matrix::new(size, size, data).map_err(|e| at(path, e.to_string()))
}

fn sign_matrix(v: &Value, path: &str) -> Result<SignMatrix> {
    let rows = as_array(v, path)?;
    let k = rows.len();
    if k == 0 {
        return Err(at(path, "sign matrix is empty"));
    }
    let mut raw = Vec::with_capacity(k);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let entries = as_array(row, &rpath)?;
        if entries.len() != k {
            return Err(at(
                &rpath,
                format!("expected {k} entries, found {}", entries.len()),
            ));
        }
        let mut r = Vec::with_capacity(k);
        for (j, e) in entries.iter().enumerate() {
            match e.as_u64() {
                Some(b @ (0 | 1)) => r.push(b as u8),
                _ => {
                    return Err(at(
                        format!("{rpath}[{j}]"),
                        format!("expected integer literal 0 or 1, found {e}"),
                    ))
                }
            }
        }
        if !r.contains(&1) {
            return Err(at(
                &rpath,
                format!("row {} has no allowed transition", i + 1),
            ));
        }
        raw.push(r);
    }
    SignMatrix::new(&raw).map_err(|e| at(path, e.to_string()))
}

fn stochastic(v: &Value, sign: &SignMatrix, path: &str) -> Result<Matrix> {
    let p = square_matrix(v, sign.size(), path)?;
    check_stochastic(&p, sign).map_err(|e| match e {
        Error::InvalidSchedule(msg) => at(path, msg),
        other => other,
    })?;
    Ok(p)
}

const TOP_KEYS: [&str; 5] = [
    "dimension",
    "matrices",
    "sign_matrix",
    "initial_distribution",
    "schedule",
];
const SCHEDULE_KEYS: [&str; 5] = ["mode", "matrices", "base", "amplitude", "seed"];

fn reject_unknown(obj: &Map<String, Value>, known: &[&str], path: &str) -> Result<()> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(at(format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn schedule(v: &Value, sign: &SignMatrix, initial: Vec<f64>) -> Result<TransitionSchedule> {
    let path = "$.schedule";
    let obj = as_object(v, path)?;
    reject_unknown(obj, &SCHEDULE_KEYS, path)?;
    let mode = obj
        .get("mode")
        .and_then(Value::as_str)
        .ok_or_else(|| at(format!("{path}.mode"), "expected a string"))?;
    let need = |key: &str| {
        obj.get(key).ok_or_else(|| {
            at(
                format!("{path}.{key}"),
                format!("required for mode `{mode}`"),
            )
        })
    };
    let generator = match mode {
        "constant" => Generator::Constant(stochastic(need("base")?, sign, "$.schedule.base")?),
        "periodic_list" => {
            let list = as_array(need("matrices")?, "$.schedule.matrices")?;
            if list.is_empty() {
                return Err(at("$.schedule.matrices", "list is empty"));
            }
            let mats = list
                .iter()
                .enumerate()
                .map(|(i, m)| stochastic(m, sign, &format!("$.schedule.matrices[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Generator::PeriodicList(mats)
        }
        "random_perturbed" => {
            let base = stochastic(need("base")?, sign, "$.schedule.base")?;
            let amplitude = as_f64(need("amplitude")?, "$.schedule.amplitude")?;
            if !(0.0..1.0).contains(&amplitude) {
                return Err(at("$.schedule.amplitude", "must lie in [0, 1)"));
            }
            let seed = match obj.get("seed") {
                Some(s) => s
                    .as_u64()
                    .ok_or_else(|| at("$.schedule.seed", "expected an unsigned integer"))?,
                None => 0,
            };
            Generator::RandomPerturbed {
                base,
                amplitude,
                seed,
            }
        }
        other => {
            return Err(at(
                format!("{path}.mode"),
                format!("unknown mode `{other}` (constant, periodic_list, random_perturbed)"),
            ))
        }
    };
    TransitionSchedule::new(sign.clone(), initial, generator).map_err(|e| at(path, e.to_string()))
}

/// Parses and validates system-file text.
pub fn parse_system(text: &str) -> Result<LoadedSystem> {
    let root: Value = serde_json::from_str(text).map_err(|e| at("$", e.to_string()))?;
    let obj = as_object(&root, "$")?;
    reject_unknown(obj, &TOP_KEYS, "$")?;
    let field = |key: &str| {
        obj.get(key)
            .ok_or_else(|| at(format!("$.{key}"), "missing required field"))
    };

    let dim = as_usize(field("dimension")?, "$.dimension")?;
    if dim == 0 {
        return Err(at("$.dimension", "must be at least 1"));
    }
    let raw = as_array(field("matrices")?, "$.matrices")?;
    if raw.is_empty() {
        return Err(at("$.matrices", "at least one matrix is required"));
    }
    let matrices = raw
        .iter()
        .enumerate()
        .map(|(k, m)| square_matrix(m, dim, &format!("$.matrices[{k}]")))
        .collect::<Result<Vec<_>>>()?;

    let sign = sign_matrix(field("sign_matrix")?, "$.sign_matrix")?;
    if sign.size() != matrices.len() {
        return Err(at(
            "$.sign_matrix",
            format!(
                "sign matrix is {0}x{0} but {1} matrices are given",
                sign.size(),
                matrices.len()
            ),
        ));
    }
    let k = sign.size();

    let initial = match obj.get("initial_distribution") {
        None => None,
        Some(v) => {
            let path = "$.initial_distribution";
            let entries = as_array(v, path)?;
            if entries.len() != k {
                return Err(at(
                    path,
                    format!("expected {k} entries, found {}", entries.len()),
                ));
            }
            let p = entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let x = as_f64(e, &format!("{path}[{i}]"))?;
                    if x > 0.0 {
                        Ok(x)
                    } else {
                        Err(at(
                            format!("{path}[{i}]"),
                            "initial probabilities must be positive",
                        ))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(at(path, format!("entries sum to {sum}, not 1")));
            }
            Some(p)
        }
    };

    let system = MatrixSystem::new(matrices, sign.clone()).map_err(|e| at("$", e.to_string()))?;
    let schedule = match obj.get("schedule") {
        None => None,
        Some(v) => {
            let init = initial.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
            Some(schedule(v, &sign, init)?)
        }
    };
    Ok(LoadedSystem {
        system,
        initial,
        schedule,
    })
}

/// Reads and parses a system file; `-` reads standard input.
pub fn read_system(path: &str) -> Result<LoadedSystem> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?
    };
    parse_system(&text)
}

pub fn emit_system(loaded: &LoadedSystem) -> SystemFile {
    let sys = &loaded.system;
    let schedule = loaded.schedule.as_ref().map(|s| match s.generator() {
        Generator::Constant(p) => ScheduleFile {
            mode: "constant".into(),
            matrices: None,
            base: Some(p.to_rows()),
            amplitude: None,
            seed: None,
        },
        Generator::PeriodicList(list) => ScheduleFile {
            mode: "periodic_list".into(),
            matrices: Some(list.iter().map(Matrix::to_rows).collect()),
            base: None,
            amplitude: None,
            seed: None,
        },
        Generator::RandomPerturbed {
            base,
            amplitude,
            seed,
        } => ScheduleFile {
            mode: "random_perturbed".into(),
            matrices: None,
            base: Some(base.to_rows()),
            amplitude: Some(*amplitude),
            seed: Some(*seed),
        },
    });
    SystemFile {
        dimension: sys.dim(),
        matrices: sys.matrices().iter().map(Matrix::to_rows).collect(),
        sign_matrix: sys.sign().to_rows(),
        initial_distribution: loaded.initial.clone(),
        schedule,
    }
}

/// Compact JSON text of a system file.
pub fn emit_system_json(loaded: &LoadedSystem) -> String {
    serde_json::to_string(&emit_system(loaded)).expect("system files always serialize")
}

/// SHA-256 of the compact canonical JSON form, hex encoded.
pub fn input_hash(file: &SystemFile) -> String {
    let text = serde_json::to_string(file).expect("system files always serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}
