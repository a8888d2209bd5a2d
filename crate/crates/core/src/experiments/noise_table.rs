//! Device calibration tables: relaxation times, per-gate errors and gate
//! durations, with a global strength factor.
//!
//! A table is JSON. Every field is optional and an empty file yields the
//! reference calibration:
//!
//! ```json
//! {
//!   "time_unit": "us",
//!   "scale": 1.0,
//!   "t1": 55.0,
//!   "t2": [68.0, 70.0, 66.0],
//!   "single_qubit_gate": "U2",
//!   "gates": { "U2": { "error": 0.001, "time": 0.08 }, "CNOT": { "error": 0.04 } }
//! }
//! ```
//!
//! Scaling by `f` multiplies every gate error and divides every relaxation
//! time; gate durations are unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{DeviceNoise, GateErrorModel};
use crate::{Error, Result};

pub const DEFAULT_T1_US: f64 = 55.0;
pub const DEFAULT_T2_US: f64 = 68.0;

/// Calibrated gate classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    /// Virtual phase gate, error free.
    U1,
    U2,
    U3,
    Cnot,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::U1, GateKind::U2, GateKind::U3, GateKind::Cnot];

    pub fn default_model(self) -> GateErrorModel {
        match self {
            GateKind::U1 => GateErrorModel { error: 0.0, time: 0.08 },
            GateKind::U2 => GateErrorModel { error: 1e-3, time: 0.08 },
            GateKind::U3 => GateErrorModel { error: 3e-3, time: 0.08 },
            GateKind::Cnot => GateErrorModel { error: 4e-2, time: 0.7 },
        }
    }

    pub fn qubits(self) -> usize {
        if self == GateKind::Cnot {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::U1 => "U1",
            GateKind::U2 => "U2",
            GateKind::U3 => "U3",
            GateKind::Cnot => "CNOT",
        })
    }
}

impl FromStr for GateKind {
    type Err = Error;

    /// Accepts the calibration names plus `single-qubit` (U2), `two-qubit`
    /// and `CX` (CNOT), case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u1" => Ok(GateKind::U1),
            "u2" | "single-qubit" => Ok(GateKind::U2),
            "u3" => Ok(GateKind::U3),
            "cnot" | "cx" | "two-qubit" => Ok(GateKind::Cnot),
            _ => Err(Error::Config(format!("unknown gate kind {s:?}"))),
        }
    }
}

impl Serialize for GateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Ns,
    #[default]
    Us,
    Ms,
}

impl TimeUnit {
    fn to_us(self) -> f64 {
        match self {
            TimeUnit::Ns => 1e-3,
            TimeUnit::Us => 1.0,
            TimeUnit::Ms => 1e3,
        }
    }
}

/// One time for every qubit, or one per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl Times {
    fn get(&self, q: usize) -> Option<f64> {
        match self {
            Times::Uniform(t) => Some(*t),
            Times::PerQubit(v) => v.get(q).copied(),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Times {
        match self {
            Times::Uniform(t) => Times::Uniform(f(*t)),
            Times::PerQubit(v) => Times::PerQubit(v.iter().map(|&t| f(t)).collect()),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Times::Uniform(t) => vec![*t],
            Times::PerQubit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    error: Option<f64>,
    time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTable {
    #[serde(default)]
    time_unit: TimeUnit,
    scale: Option<f64>,
    t1: Option<Times>,
    t2: Option<Times>,
    single_qubit_gate: Option<String>,
    #[serde(default)]
    gates: BTreeMap<String, GateEntry>,
}

/// A validated table with times in microseconds. `scale` is kept separate
/// from the base values so the table round-trips through JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseTable {
    time_unit: TimeUnit,
    scale: f64,
    t1: Times,
    t2: Times,
    /// Calibration entry used for single-qubit rotations.
    single_qubit_gate: GateKind,
    gates: BTreeMap<GateKind, GateErrorModel>,
}

impl Default for NoiseTable {
    fn default() -> Self {
        NoiseTable {
            time_unit: TimeUnit::Us,
            scale: 1.0,
            t1: Times::Uniform(DEFAULT_T1_US),
            t2: Times::Uniform(DEFAULT_T2_US),
            single_qubit_gate: GateKind::U2,
            gates: GateKind::ALL.iter().map(|&k| (k, k.default_model())).collect(),
        }
    }
}

impl<'de> Deserialize<'de> for NoiseTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTable::deserialize(d)?;
        NoiseTable::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

impl NoiseTable {
    /// Parses table text. Blank text gives the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(NoiseTable::default());
        }
        serde_json::from_str(text).map_err(|e| Error::Config(format!("noise table: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read noise table {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn from_raw(raw: RawTable) -> Result<Self> {
        let unit = raw.time_unit.to_us();
        let mut table = NoiseTable {
            scale: raw.scale.unwrap_or(1.0),
            ..NoiseTable::default()
        };
        if let Some(t1) = raw.t1 {
            table.t1 = t1.map(|t| t * unit);
        }
        if let Some(t2) = raw.t2 {
            table.t2 = t2.map(|t| t * unit);
        }
        if let Some(k) = raw.single_qubit_gate {
            table.single_qubit_gate = k.parse()?;
        }
        for (name, entry) in raw.gates {
            let kind: GateKind = name.parse()?;
            let model = table.gates.get_mut(&kind).expect("every kind has a default");
            if let Some(e) = entry.error {
                model.error = e;
            }
            if let Some(t) = entry.time {
                model.time = t * unit;
            }
        }
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("noise table: {msg}")));
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return bad(format!("scale {} must be finite and nonnegative", self.scale));
        }
        let (t1, t2) = (self.t1.values(), self.t2.values());
        if t1.is_empty() || t2.is_empty() {
            return bad("relaxation time lists are empty".into());
        }
        if let Some(t) = t1.iter().chain(&t2).find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("relaxation time {t} must be positive"));
        }
        for (kind, m) in &self.gates {
            if !(m.error >= 0.0) || !(m.time >= 0.0) || !m.time.is_finite() {
                return bad(format!("{kind} entry has negative or non-finite values"));
            }
            if m.error * self.scale > 1.0 {
                return bad(format!("{kind} error {} exceeds 1 after scaling by {}", m.error, self.scale));
            }
        }
        if self.single_qubit_gate.qubits() != 1 {
            return bad(format!("{} is not a single-qubit gate", self.single_qubit_gate));
        }
        for q in 0..t1.len().max(t2.len()) {
            if let (Some(a), Some(b)) = (self.t1(q), self.t2(q)) {
                if b > 2.0 * a {
                    return bad(format!("qubit {q}: T2 = {b} exceeds 2 T1 = {}", 2.0 * a));
                }
            }
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The same calibration at strength `self.scale * f`.
    pub fn scaled(&self, f: f64) -> Result<NoiseTable> {
        let out = NoiseTable { scale: self.scale * f, ..self.clone() };
        out.validate()?;
        Ok(out)
    }

    /// Scaled error model of a gate kind.
    pub fn gate(&self, kind: GateKind) -> GateErrorModel {
        let m = self.gates[&kind];
        GateErrorModel { error: m.error * self.scale, time: m.time }
    }

    /// Scaled relaxation time of qubit `q`, `None` past the end of a list.
    pub fn t1(&self, q: usize) -> Option<f64> {
        self.t1.get(q).map(|t| t / self.scale)
    }

    pub fn t2(&self, q: usize) -> Option<f64> {
        self.t2.get(q).map(|t| t / self.scale)
    }

    /// Device noise for an `n`-qubit register.
    pub fn device_noise(&self, n: usize) -> Result<DeviceNoise> {
        let times = |get: &dyn Fn(usize) -> Option<f64>, name: &str| {
            (0..n)
                .map(|q| get(q).ok_or_else(|| Error::Config(format!("noise table lists no {name} for qubit {q}"))))
                .collect::<Result<Vec<f64>>>()
        };
        Ok(DeviceNoise {
            single_qubit: self.gate(self.single_qubit_gate),
            two_qubit: self.gate(GateKind::Cnot),
            t1: times(&|q| self.t1(q), "T1")?,
            t2: times(&|q| self.t2(q), "T2")?,
        })
    }
}
