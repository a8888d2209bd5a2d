//! Cost and variance on a grid over the first cost and mixer angles, with
//! and without noise.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{CircuitBlock, NoiseSpec};
use super::{config_err, num, Check, Csv, ExperimentKind, ManifestBuilder, RunOutput};
use crate::ansatz::{build_qaoa, GateNoise, ParametricCircuit};
use crate::pauli::PauliSum;
use crate::{rng, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Points per axis, endpoints included.
    pub resolution: usize,
    pub gamma: [f64; 2],
    pub beta: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub circuit: CircuitBlock,
    pub noise: NoiseSpec,
    pub grid: GridBlock,
    /// Values of the remaining parameters; empty means all zero.
    pub fixed: Vec<f64>,
}

impl LandscapeConfig {
    pub fn defaults(_full: bool) -> Self {
        LandscapeConfig {
            experiment: ExperimentKind::Landscape,
            seed: 0,
            circuit: CircuitBlock { nqubits: 6, layers: 1 },
            noise: NoiseSpec::ZDephasing { eta: 0.1 },
            grid: GridBlock { resolution: 41, gamma: [0.0, PI], beta: [0.0, PI] },
            fixed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmExtremes {
    pub min_cost: f64,
    pub max_variance: f64,
}

fn axis(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range[0]];
    }
    (0..n).map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64).collect()
}

fn scan(circuit: &ParametricCircuit, h: &PauliSum, base: &[f64], gammas: &[f64], betas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let points: Vec<(f64, f64)> = gammas.iter().flat_map(|&g| betas.iter().map(move |&b| (g, b))).collect();
    points
        .par_iter()
        .map(|&(g, b)| {
            let mut theta = base.to_vec();
            theta[0] = g;
            theta[1] = b;
            let rho = circuit.evolve(&theta)?;
            Ok((rho.expectation(h)?, rho.variance(h)?))
        })
        .collect()
}

pub(super) fn run(cfg: &LandscapeConfig, echo: Value) -> Result<RunOutput> {
    let spec = cfg.circuit.spec()?;
    let p = spec.nparams();
    let base = match cfg.fixed.len() {
        0 => vec![0.0; p],
        n if n == p => cfg.fixed.clone(),
        n => return config_err(format!("fixed lists {n} values for {p} parameters")),
    };
    let g = &cfg.grid;
    if g.resolution == 0 || g.resolution > 1001 {
        return config_err(format!("grid resolution {} outside [1, 1001]", g.resolution));
    }
    if g.gamma.iter().chain(&g.beta).any(|x| !x.is_finite()) {
        return config_err("grid ranges must be finite");
    }
    let noise = cfg.noise.gate_noise(spec.nqubits, rng::derive(cfg.seed, 1))?;
    let arms = [("noiseless", build_qaoa(&spec, &GateNoise::None)?), ("noisy", build_qaoa(&spec, &noise)?)];
    let (gammas, betas) = (axis(g.gamma, g.resolution), axis(g.beta, g.resolution));

    let mut out = ManifestBuilder::new(ExperimentKind::Landscape, cfg.seed, echo);
    let mut csv = Csv::new(&["arm", "gamma1", "beta1", "cost", "variance"]);
    let mut extremes = Vec::new();
    let mut min_variance = f64::INFINITY;
    let mut origin = None;
    for (label, circuit) in &arms {
        out.circuit(label, circuit);
        let values = scan(circuit, &spec.cost, &base, &gammas, &betas)?;
        let mut ext = ArmExtremes { min_cost: f64::INFINITY, max_variance: f64::NEG_INFINITY };
        let grid = gammas.iter().flat_map(|&g| betas.iter().map(move |&b| (g, b)));
        for ((gamma, beta), (cost, var)) in grid.zip(values) {
            csv.row(&[label.to_string(), num(gamma), num(beta), num(cost), num(var)]);
            ext.min_cost = ext.min_cost.min(cost);
            ext.max_variance = ext.max_variance.max(var);
            min_variance = min_variance.min(var);
            if *label == "noiseless" && gamma == 0.0 && beta == 0.0 {
                origin = Some(cost);
            }
        }
        extremes.push(ext);
    }
    out.csv("landscape.csv", csv);

    let (clean, noisy) = (extremes[0], extremes[1]);
    out.checks.push(Check::invariant("variance_nonnegative", min_variance >= -1e-12, format!("min variance {min_variance:e}")));
    if let (Some(c), true) = (origin, base.iter().all(|&t| t == 0.0)) {
        out.checks.push(Check::invariant("origin_cost_zero", c.abs() <= 1e-12, format!("cost at origin {c:e}")));
    }
    out.checks.push(Check::trend(
        "noise_flattens_variance",
        noisy.max_variance <= clean.max_variance,
        format!("max variance noisy {} vs noiseless {}", noisy.max_variance, clean.max_variance),
    ));
    out.checks.push(Check::trend(
        "noise_raises_minimum",
        noisy.min_cost >= clean.min_cost,
        format!("min cost noisy {} vs noiseless {}", noisy.min_cost, clean.min_cost),
    ));
    Ok(out.finish(json!({ "noiseless": clean, "noisy": noisy, "points_per_arm": gammas.len() * betas.len() })))
}
