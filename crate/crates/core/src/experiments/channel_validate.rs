//! Analytic noise channels against independent constructions: quadrature and
//! Monte-Carlo averages of the jitter channel, closed-form relaxation and
//! dephasing factors.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{config_err, num, Check, Csv, ExperimentKind, ManifestBuilder, RunOutput};
use crate::channels::{
    gaussian_fluctuation_channel, gaussian_fluctuation_quadrature, monte_carlo_fluctuation_check, thermal_relaxation,
    z_depolarizing, KrausChannel,
};
use crate::linalg::max_abs;
use crate::pauli::PauliSum;
use crate::{rng, CMatrix, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationBlock {
    /// Involutory generator as `[coefficient, letters]` terms, e.g.
    /// `[[0.6, "XZ"], [0.8, "ZY"]]`.
    pub generator: Vec<(f64, String)>,
    pub sigmas: Vec<f64>,
    pub quadrature_nodes: usize,
    pub quadrature_tol: f64,
    pub mc_samples: usize,
    pub mc_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalBlock {
    pub t1: f64,
    pub t2: f64,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelValidateConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub fluctuation: FluctuationBlock,
    pub thermal: ThermalBlock,
    pub dephasing_etas: Vec<f64>,
    /// Tolerance of the closed-form relaxation and dephasing checks.
    pub exact_tol: f64,
}

impl ChannelValidateConfig {
    pub fn defaults(_full: bool) -> Self {
        ChannelValidateConfig {
            experiment: ExperimentKind::ChannelValidate,
            seed: 0,
            fluctuation: FluctuationBlock {
                generator: vec![(1.0, "X".into())],
                sigmas: vec![0.1, 0.3, 0.5, 1.0],
                quadrature_nodes: 32,
                quadrature_tol: 1e-8,
                mc_samples: 10_000,
                mc_tol: 0.05,
            },
            thermal: ThermalBlock { t1: 55.0, t2: 68.0, times: vec![0.08, 0.7, 10.0, 100.0] },
            dephasing_etas: vec![0.0, 0.1, 0.25, 0.5],
            exact_tol: 1e-12,
        }
    }
}

struct Row {
    check: &'static str,
    parameter: f64,
    value: f64,
    reference: f64,
    tolerance: f64,
}

impl Row {
    fn passed(&self) -> bool {
        (self.value - self.reference).abs() <= self.tolerance
    }
}

/// `⟨a|E(|b⟩⟨c|)|d⟩` for a single-qubit channel.
fn element(ch: &KrausChannel, b: usize, c: usize, a: usize, d: usize) -> Result<C64> {
    let mut m = CMatrix::zeros(2, 2);
    m[(b, c)] = C64::new(1.0, 0.0);
    Ok(ch.apply_matrix(&m)?[(a, d)])
}

fn generator(terms: &[(f64, String)]) -> Result<PauliSum> {
    let bad = |e: crate::Error| crate::Error::Config(format!("fluctuation.generator: {e}"));
    let parsed = terms.iter().map(|(c, s)| Ok((*c, s.parse().map_err(bad)?))).collect::<Result<Vec<_>>>()?;
    let n = parsed.first().map(|(_, s): &(f64, crate::PauliString)| s.len()).ok_or_else(|| crate::Error::Config("fluctuation.generator is empty".into()))?;
    PauliSum::from_terms(n, parsed).map_err(bad)
}

pub(super) fn run(cfg: &ChannelValidateConfig, echo: Value) -> Result<RunOutput> {
    let fl = &cfg.fluctuation;
    let x = generator(&fl.generator)?;
    if fl.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return config_err("sigmas must be finite and nonnegative");
    }
    if fl.quadrature_nodes == 0 || fl.mc_samples < 100 {
        return config_err("need at least 1 quadrature node and 100 Monte-Carlo samples");
    }
    if cfg.dephasing_etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return config_err("dephasing_etas must lie in [0, 1]");
    }

    let mut rows = Vec::new();
    for (i, &sigma) in fl.sigmas.iter().enumerate() {
        let analytic = gaussian_fluctuation_channel(&x, sigma)?;
        let quad = gaussian_fluctuation_quadrature(&x, sigma, fl.quadrature_nodes)?;
        let diff = max_abs(&(analytic.choi()? - quad.choi()?));
        rows.push(Row { check: "quadrature_choi_max_diff", parameter: sigma, value: diff, reference: 0.0, tolerance: fl.quadrature_tol });
        let mc = monte_carlo_fluctuation_check(&x, sigma, fl.mc_samples, rng::derive(cfg.seed, i as u64))?;
        rows.push(Row { check: "monte_carlo_trace_distance", parameter: sigma, value: mc, reference: 0.0, tolerance: fl.mc_tol });
    }

    let th = &cfg.thermal;
    for &t in &th.times {
        let ch = thermal_relaxation(th.t1, th.t2, t, 0)?;
        let excited = element(&ch, 1, 1, 1, 1)?.re;
        let coherence = element(&ch, 0, 1, 0, 1)?.norm();
        let tol = cfg.exact_tol;
        rows.push(Row { check: "thermal_excited_population", parameter: t, value: excited, reference: (-t / th.t1).exp(), tolerance: tol });
        rows.push(Row { check: "thermal_coherence", parameter: t, value: coherence, reference: (-t / th.t2).exp(), tolerance: tol });
        rows.push(Row { check: "thermal_completeness_defect", parameter: t, value: ch.completeness_defect(), reference: 0.0, tolerance: tol });
    }
    for &eta in &cfg.dephasing_etas {
        let ch = z_depolarizing(eta, &[0])?;
        let coherence = element(&ch, 0, 1, 0, 1)?.re;
        rows.push(Row { check: "dephasing_coherence", parameter: eta, value: coherence, reference: 1.0 - 2.0 * eta, tolerance: cfg.exact_tol });
    }

    let mut out = ManifestBuilder::new(ExperimentKind::ChannelValidate, cfg.seed, echo);
    let mut csv = Csv::new(&["check", "parameter", "value", "reference", "tolerance", "pass"]);
    for r in &rows {
        csv.row(&[r.check.into(), num(r.parameter), num(r.value), num(r.reference), num(r.tolerance), r.passed().to_string()]);
    }
    out.csv("channel_validate.csv", csv);
    let mut names: Vec<&str> = Vec::new();
    for r in &rows {
        if !names.contains(&r.check) {
            names.push(r.check);
        }
    }
    for name in names {
        let of: Vec<&Row> = rows.iter().filter(|r| r.check == name).collect();
        let worst = of.iter().map(|r| (r.value - r.reference).abs()).fold(0.0, f64::max);
        let passed = of.iter().all(|r| r.passed());
        let detail = format!("{} cases, worst deviation {worst:e}", of.len());
        // Sampling error is statistical; everything else is exact.
        out.checks.push(if name == "monte_carlo_trace_distance" {
            Check::trend(name, passed, detail)
        } else {
            Check::invariant(name, passed, detail)
        });
    }
    let summary = json!({
        "quadrature_max_diff": rows.iter().filter(|r| r.check == "quadrature_choi_max_diff").map(|r| r.value).fold(0.0, f64::max),
        "monte_carlo_max_distance": rows.iter().filter(|r| r.check == "monte_carlo_trace_distance").map(|r| r.value).fold(0.0, f64::max),
    });
    Ok(out.finish(summary))
}
