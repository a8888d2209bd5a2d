//! Experiment configuration: JSON documents deep-merged over per-experiment
//! defaults and then checked against a strict schema.
//!
//! Objects merge key by key; arrays, scalars, noise tables (`"table"` keys)
//! and objects whose `"kind"` changes replace the default wholesale. A table
//! may be given inline or as a path relative to the config file, and is
//! always echoed inline.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Map;
pub use serde_json::Value;

use super::noise_table::NoiseTable;
use super::ExperimentKind;
use crate::ansatz::{GateNoise, QaoaSpec};
use crate::{Error, Result};

/// Reads a config file. Blank files are empty configs; a run manifest is
/// accepted and its `config` entry used.
pub fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Value> {
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    match value {
        Value::Object(mut m) if m.contains_key("tool") && m.contains_key("config") => {
            Ok(m.remove("config").expect("checked"))
        }
        v @ Value::Object(_) => Ok(v),
        _ => Err(Error::Config("config must be a JSON object".into())),
    }
}

pub fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// Deep merge of `patch` into `base`.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if p.get("kind").is_none_or(|k| b.get("kind") == Some(k)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if k != "table" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Replaces every string-valued `"table"` entry with the table it names.
fn inline_tables(v: &mut Value, base_dir: Option<&Path>) -> Result<()> {
    match v {
        Value::Object(m) => {
            for (k, child) in m.iter_mut() {
                if k == "table" {
                    if let Value::String(p) = child {
                        let path = base_dir.map_or_else(|| Path::new(p.as_str()).to_path_buf(), |d| d.join(p.as_str()));
                        let table = NoiseTable::load(&path)?;
                        *child = serde_json::to_value(table).expect("tables serialize");
                        continue;
                    }
                }
                inline_tables(child, base_dir)?;
            }
            Ok(())
        }
        Value::Array(items) => items.iter_mut().try_for_each(|c| inline_tables(c, base_dir)),
        _ => Ok(()),
    }
}

/// Merges `user` over `defaults`, applies a seed override and validates.
/// Returns the typed config and its canonical JSON echo.
pub fn resolve<T: Serialize + DeserializeOwned>(
    kind: ExperimentKind,
    defaults: &T,
    mut user: Value,
    seed: Option<u64>,
    base_dir: Option<&Path>,
) -> Result<(T, Value)> {
    if !user.is_object() {
        return Err(Error::Config("config must be a JSON object".into()));
    }
    if let Some(found) = user.get("experiment") {
        if found != &Value::String(kind.to_string()) {
            return Err(Error::Config(format!("config is for experiment {found}, not {kind}")));
        }
    }
    inline_tables(&mut user, base_dir)?;
    let mut merged = serde_json::to_value(defaults).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut merged, user);
    if let Some(s) = seed {
        merged["seed"] = Value::from(s);
    }
    let typed: T = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
    let echo = serde_json::to_value(&typed).map_err(|e| Error::Config(e.to_string()))?;
    Ok((typed, echo))
}

/// The Ising-ring QAOA instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitBlock {
    pub nqubits: usize,
    pub layers: usize,
}

impl CircuitBlock {
    pub fn spec(&self) -> Result<QaoaSpec> {
        if self.nqubits < 3 || self.nqubits > crate::DEFAULT_QUBIT_CAP {
            return Err(Error::Config(format!(
                "nqubits must lie in [3, {}], got {}",
                crate::DEFAULT_QUBIT_CAP,
                self.nqubits
            )));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        QaoaSpec::ring(self.nqubits, self.layers)
    }
}

/// Gate noise as written in a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    ZDephasing {
        eta: f64,
    },
    GaussianFluctuation {
        sigma: f64,
        #[serde(default)]
        samples: usize,
    },
    Device {
        #[serde(default)]
        table: NoiseTable,
    },
}

impl NoiseSpec {
    /// Gate noise for an `n`-qubit register; `seed` feeds sampled jitter.
    pub fn gate_noise(&self, n: usize, seed: u64) -> Result<GateNoise> {
        Ok(match self {
            NoiseSpec::None => GateNoise::None,
            NoiseSpec::ZDephasing { eta } => {
                if !(0.0..=1.0).contains(eta) {
                    return Err(Error::Config(format!("eta {eta} outside [0, 1]")));
                }
                GateNoise::ZDephasing { eta: *eta }
            }
            NoiseSpec::GaussianFluctuation { sigma, samples } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::Config(format!("sigma {sigma} must be finite and nonnegative")));
                }
                GateNoise::GaussianFluctuation { sigma: *sigma, samples: *samples, seed }
            }
            NoiseSpec::Device { table } => GateNoise::Device(table.device_noise(n)?),
        })
    }
}
