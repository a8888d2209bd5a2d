//! Gradient second moments, their QFI bound and the optimum shift as the
//! dephasing strength grows.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::CircuitBlock;
use super::{config_err, num, Check, Csv, ExperimentKind, ManifestBuilder, RunOutput};
use crate::ansatz::{build_qaoa, GateNoise, ParametricCircuit};
use crate::bounds::{halton_probes, probe_stats_multi, qfi_bound_from_stats};
use crate::estimators::{BaselinePolicy, EstimatorKind};
use crate::optimizer::{minimize_exact, minimize_from, MinimizeOptions, Minimum};
use crate::{rng, Result};

/// Allowed rise of a second-moment curve between neighbouring rows.
pub const MOMENT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSweep {
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    /// Quasi-random points in `[0, 2π)^P`.
    pub count: usize,
    /// Also probe at every located optimum.
    pub include_optima: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeBlock {
    /// Random starts besides the warm starts.
    pub restarts: usize,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiScanConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub circuit: CircuitBlock,
    pub noise: EtaSweep,
    pub probes: ProbeBlock,
    pub minimize: MinimizeBlock,
    pub baseline: BaselinePolicy,
}

impl QfiScanConfig {
    pub fn defaults(_full: bool) -> Self {
        QfiScanConfig {
            experiment: ExperimentKind::QfiScan,
            seed: 0,
            circuit: CircuitBlock { nqubits: 6, layers: 10 },
            noise: EtaSweep { etas: (0..=8).map(|i| i as f64 / 20.0).collect() },
            probes: ProbeBlock { count: 64, include_optima: true },
            minimize: MinimizeBlock { restarts: 2, max_iterations: 500 },
            baseline: BaselinePolicy::Zero,
        }
    }
}

/// One row of the scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub eta: f64,
    pub g2_sqrt_ld: f64,
    pub g2_sqrt_sld: f64,
    pub qfi_bound: f64,
    pub err_opt: f64,
}

fn noisy(spec: &crate::QaoaSpec, eta: f64) -> Result<ParametricCircuit> {
    let noise = if eta == 0.0 { GateNoise::None } else { GateNoise::ZDephasing { eta } };
    build_qaoa(spec, &noise)
}

pub(super) fn run(cfg: &QfiScanConfig, echo: Value) -> Result<RunOutput> {
    let spec = cfg.circuit.spec()?;
    let etas = &cfg.noise.etas;
    if etas.is_empty() {
        return config_err("noise.etas is empty");
    }
    if let Some(e) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return config_err(format!("eta {e} outside [0, 1]"));
    }
    if cfg.probes.count == 0 && !cfg.probes.include_optima {
        return config_err("probe set is empty");
    }
    let h = &spec.cost;
    let h_norm = h.op_norm_inf()?;
    let mut out = ManifestBuilder::new(ExperimentKind::QfiScan, cfg.seed, echo);

    let ideal = build_qaoa(&spec, &GateNoise::None)?;
    let opts = |k: u64| MinimizeOptions {
        restarts: cfg.minimize.restarts,
        max_iterations: cfg.minimize.max_iterations,
        seed: rng::derive(cfg.seed, k),
        ..MinimizeOptions::default()
    };
    let theta_opt = minimize_exact(&ideal, h, &opts(0))?;

    // Each noise level starts from the noiseless optimum and the previous
    // level's optimum, plus fresh random starts.
    let mut optima: Vec<Minimum> = Vec::with_capacity(etas.len());
    for (i, &eta) in etas.iter().enumerate() {
        let circuit = noisy(&spec, eta)?;
        let o = opts(1 + i as u64);
        let mut starts = vec![theta_opt.theta.clone()];
        if let Some(prev) = optima.last() {
            starts.push(prev.theta.clone());
        }
        starts.extend((0..o.restarts).map(|r| {
            use rand::Rng as _;
            let mut g = rng::rng(rng::derive(o.seed, r as u64));
            (0..spec.nparams()).map(|_| g.random_range(0.0..std::f64::consts::TAU)).collect()
        }));
        optima.push(minimize_from(&circuit, h, starts, &MinimizeOptions { restarts: 0, ..o })?);
    }

    let mut probes = halton_probes(cfg.probes.count, spec.nparams(), rng::derive(cfg.seed, 0x70726f6265))?;
    if cfg.probes.include_optima {
        probes.push(theta_opt.theta.clone());
        probes.extend(optima.iter().map(|m| m.theta.clone()));
    }

    let mut rows = Vec::with_capacity(etas.len());
    let mut sampled_any = false;
    for (i, (&eta, opt)) in etas.iter().zip(&optima).enumerate() {
        let circuit = noisy(&spec, eta)?;
        if i == 0 || i + 1 == etas.len() {
            out.circuit(&format!("eta={eta}"), &circuit);
        }
        let kinds = [EstimatorKind::Ld, EstimatorKind::Sld];
        let (stats, sampled) =
            probe_stats_multi(&circuit, &probes, h, &kinds, cfg.baseline, rng::derive(cfg.seed, 0x1000 + i as u64))?;
        sampled_any |= sampled;
        let worst = |s: &[crate::bounds::ProbeStats]| s.iter().map(|p| p.second_moment).fold(0.0, f64::max).sqrt();
        rows.push(ScanRow {
            eta,
            g2_sqrt_ld: worst(&stats[0]),
            g2_sqrt_sld: worst(&stats[1]),
            qfi_bound: qfi_bound_from_stats(spec.nparams(), h_norm, &stats[1]),
            err_opt: opt.cost - theta_opt.cost,
        });
    }

    let mut csv = Csv::new(&["eta", "g2_sqrt_LD", "g2_sqrt_SLD", "qfi_bound", "err_opt"]);
    for r in &rows {
        csv.row(&[num(r.eta), num(r.g2_sqrt_ld), num(r.g2_sqrt_sld), num(r.qfi_bound), num(r.err_opt)]);
    }
    out.csv("qfi_scan.csv", csv);
    out.checks = checks(&rows);

    let summary = json!({
        "noiseless_min_cost": theta_opt.cost,
        "noisy_min_costs": optima.iter().map(|m| m.cost).collect::<Vec<_>>(),
        "probe_set_size": probes.len(),
        "second_moments_sampled": sampled_any,
        "rows": rows,
    });
    Ok(out.finish(summary))
}

/// Rows are taken in the order given; the trend checks assume `eta` ascends.
pub fn checks(rows: &[ScanRow]) -> Vec<Check> {
    let bound_ok = rows
        .iter()
        .filter(|r| r.g2_sqrt_ld > r.qfi_bound + 1e-9 || r.g2_sqrt_sld > r.qfi_bound + 1e-9)
        .map(|r| r.eta)
        .collect::<Vec<_>>();
    let ascending = rows.windows(2).all(|w| w[1].eta > w[0].eta);
    let non_increasing =
        |f: fn(&ScanRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]) + MOMENT_SLACK);
    let err_rises = rows.windows(2).all(|w| w[1].err_opt >= w[0].err_opt);
    let mut out = vec![
        Check::invariant(
            "qfi_bound_dominates",
            bound_ok.is_empty(),
            if bound_ok.is_empty() { "every row".to_string() } else { format!("violated at eta {bound_ok:?}") },
        ),
        Check::trend("sld_moment_non_increasing", ascending && non_increasing(|r| r.g2_sqrt_sld), format!("slack {MOMENT_SLACK}")),
        Check::trend("ld_moment_non_increasing", ascending && non_increasing(|r| r.g2_sqrt_ld), format!("slack {MOMENT_SLACK}")),
        Check::trend("err_opt_non_decreasing", ascending && err_rises, "no slack"),
    ];
    if let Some(first) = rows.first().filter(|r| r.eta == 0.0) {
        out.push(Check::trend("err_opt_vanishes_without_noise", first.err_opt.abs() <= 1e-2, format!("err_opt(0) = {:e}", first.err_opt)));
    }
    out
}
