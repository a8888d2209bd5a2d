//! Reproducible experiment runners. Every run is a pure function of its
//! resolved config (which carries the master seed) and produces CSV files
//! plus a JSON manifest echoing that config.

pub mod config;
pub mod noise_table;

mod bounds_audit;
mod channel_validate;
mod convergence;
mod landscape;
mod qfi_scan;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

pub use bounds_audit::BoundsAuditConfig;
pub use channel_validate::ChannelValidateConfig;
pub use convergence::{ArmReport, ConvergenceConfig};
pub use landscape::LandscapeConfig;
pub use noise_table::NoiseTable;
pub use qfi_scan::QfiScanConfig;

pub const TOOL_NAME: &str = "noisy-vqo";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QfiScan,
    Landscape,
    Convergence,
    BoundsAudit,
    ChannelValidate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::QfiScan,
        ExperimentKind::Landscape,
        ExperimentKind::Convergence,
        ExperimentKind::BoundsAudit,
        ExperimentKind::ChannelValidate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::QfiScan => "qfi-scan",
            ExperimentKind::Landscape => "landscape",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::BoundsAudit => "bounds-audit",
            ExperimentKind::ChannelValidate => "channel-validate",
        }
    }

    /// Fully populated default config; `full` selects the larger sizes.
    pub fn defaults(self, full: bool) -> Value {
        let v = match self {
            ExperimentKind::QfiScan => serde_json::to_value(QfiScanConfig::defaults(full)),
            ExperimentKind::Landscape => serde_json::to_value(LandscapeConfig::defaults(full)),
            ExperimentKind::Convergence => serde_json::to_value(ConvergenceConfig::defaults(full)),
            ExperimentKind::BoundsAudit => serde_json::to_value(BoundsAuditConfig::defaults(full)),
            ExperimentKind::ChannelValidate => serde_json::to_value(ChannelValidateConfig::defaults(full)),
        };
        v.expect("default configs serialize")
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Invariants are guaranteed by the mathematics and fail the run; trends
/// are the qualitative claims being reproduced and are only reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Invariant,
    Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn invariant(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), kind: CheckKind::Invariant, passed, detail: detail.into() }
    }

    pub fn trend(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), kind: CheckKind::Trend, passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    /// Data rows, header excluded.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Resolved config; feeding it back reproduces every output.
    pub config: Value,
    /// Elementary-gate decomposition of each simulated circuit.
    pub decomposition: Vec<Value>,
    pub outputs: Vec<OutputEntry>,
    pub checks: Vec<Check>,
    /// Experiment-specific headline numbers.
    pub summary: Value,
    pub environment: Environment,
}

/// A named text file produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub files: Vec<OutputFile>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.manifest.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_invariants(&self) -> Vec<&Check> {
        self.manifest.checks.iter().filter(|c| c.kind == CheckKind::Invariant && !c.passed).collect()
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("manifests serialize") + "\n"
    }

    /// Writes every file and the manifest into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in &self.files {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents)?;
            written.push(path);
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest_json())?;
        written.push(path);
        Ok(written)
    }
}

/// Run-time switches that are not part of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's master seed.
    pub seed: Option<u64>,
    /// Selects the larger default sizes.
    pub full: bool,
    /// Directory against which relative noise-table paths resolve.
    pub base_dir: Option<PathBuf>,
}

/// Resolves `user` against the defaults of `kind` and runs the experiment.
pub fn run(kind: ExperimentKind, user: Value, opts: &RunOptions) -> Result<RunOutput> {
    let base = opts.base_dir.as_deref();
    match kind {
        ExperimentKind::QfiScan => {
            let (cfg, echo) = config::resolve(kind, &QfiScanConfig::defaults(opts.full), user, opts.seed, base)?;
            qfi_scan::run(&cfg, echo)
        }
        ExperimentKind::Landscape => {
            let (cfg, echo) = config::resolve(kind, &LandscapeConfig::defaults(opts.full), user, opts.seed, base)?;
            landscape::run(&cfg, echo)
        }
        ExperimentKind::Convergence => {
            let (cfg, echo) = config::resolve(kind, &ConvergenceConfig::defaults(opts.full), user, opts.seed, base)?;
            convergence::run(&cfg, echo)
        }
        ExperimentKind::BoundsAudit => {
            let (cfg, echo) = config::resolve(kind, &BoundsAuditConfig::defaults(opts.full), user, opts.seed, base)?;
            bounds_audit::run(&cfg, echo)
        }
        ExperimentKind::ChannelValidate => {
            let (cfg, echo) =
                config::resolve(kind, &ChannelValidateConfig::defaults(opts.full), user, opts.seed, base)?;
            channel_validate::run(&cfg, echo)
        }
    }
}

/// Shorthand for config validation failures.
fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text under construction; fields never contain commas.
struct Csv {
    text: String,
    rows: usize,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv { text: header.join(",") + "\n", rows: 0 }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
        self.rows += 1;
    }

    fn finish(self, name: &str, outputs: &mut Vec<OutputEntry>, files: &mut Vec<OutputFile>) {
        outputs.push(OutputEntry { file: name.into(), rows: self.rows });
        files.push(OutputFile { name: name.into(), contents: self.text });
    }
}

/// Assembles the manifest common to every experiment.
struct ManifestBuilder {
    kind: ExperimentKind,
    seed: u64,
    config: Value,
    decomposition: Vec<Value>,
    outputs: Vec<OutputEntry>,
    files: Vec<OutputFile>,
    checks: Vec<Check>,
}

impl ManifestBuilder {
    fn new(kind: ExperimentKind, seed: u64, mut config: Value) -> Self {
        config["experiment"] = Value::String(kind.to_string());
        ManifestBuilder { kind, seed, config, decomposition: Vec::new(), outputs: Vec::new(), files: Vec::new(), checks: Vec::new() }
    }

    fn circuit(&mut self, label: &str, circuit: &crate::ParametricCircuit) {
        self.decomposition.push(serde_json::json!({ "circuit": label, "gates": circuit.decomposition() }));
    }

    fn csv(&mut self, name: &str, csv: Csv) {
        csv.finish(name, &mut self.outputs, &mut self.files);
    }

    fn finish(self, summary: Value) -> RunOutput {
        RunOutput {
            manifest: Manifest {
                tool: TOOL_NAME.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                experiment: self.kind,
                seed: self.seed,
                config: self.config,
                decomposition: self.decomposition,
                outputs: self.outputs,
                checks: self.checks,
                summary,
                environment: Environment { os: std::env::consts::OS.into(), arch: std::env::consts::ARCH.into() },
            },
            files: self.files,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), Value::String(k.name().into()));
            assert_eq!(k.defaults(false)["experiment"], Value::String(k.name().into()));
        }
        assert!("fig-5".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn defaults_resolve_to_themselves() {
        for k in ExperimentKind::ALL {
            for full in [false, true] {
                let d = k.defaults(full);
                let out = match k {
                    ExperimentKind::QfiScan => config::resolve(k, &QfiScanConfig::defaults(full), d.clone(), None, None).map(|r| r.1),
                    ExperimentKind::Landscape => config::resolve(k, &LandscapeConfig::defaults(full), d.clone(), None, None).map(|r| r.1),
                    ExperimentKind::Convergence => config::resolve(k, &ConvergenceConfig::defaults(full), d.clone(), None, None).map(|r| r.1),
                    ExperimentKind::BoundsAudit => config::resolve(k, &BoundsAuditConfig::defaults(full), d.clone(), None, None).map(|r| r.1),
                    ExperimentKind::ChannelValidate => config::resolve(k, &ChannelValidateConfig::defaults(full), d.clone(), None, None).map(|r| r.1),
                };
                assert_eq!(out.unwrap(), d);
            }
        }
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }
}
