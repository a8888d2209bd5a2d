//! Shot-noise SGD on the noiseless circuit and on device noise scaled by
//! several factors, repeated over independent trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::CircuitBlock;
use super::noise_table::NoiseTable;
use super::{config_err, num, Check, Csv, ExperimentKind, ManifestBuilder, RunOutput};
use crate::ansatz::{build_qaoa, GateNoise, ParametricCircuit};
use crate::estimators::{BaselinePolicy, EstimatorKind};
use crate::optimizer::{multi_trial, Init, LearningRate, OptimizerConfig, RunTrace, TrialSummary};
use crate::pauli::PauliSum;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledTable {
    pub table: NoiseTable,
    /// Strength factors applied on top of the table's own scale.
    pub scales: Vec<f64>,
}

/// SGD settings shared by every arm; per-trial seeds derive from the
/// master seed, so trial `t` of every arm starts from the same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdBlock {
    pub iterations: usize,
    pub learning_rate: LearningRate,
    pub batch: usize,
    pub estimator: EstimatorKind,
    pub baseline: BaselinePolicy,
    pub shots: usize,
    pub init: Init,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Trailing iterations averaged into the final cost of a trial.
    pub tail_window: usize,
    /// A curve has converged once it stays within this fraction of its total
    /// descent from its final value.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub circuit: CircuitBlock,
    pub noise: ScaledTable,
    pub optimizer: SgdBlock,
    pub trials: usize,
    pub analysis: AnalysisBlock,
}

impl ConvergenceConfig {
    pub fn defaults(full: bool) -> Self {
        ConvergenceConfig {
            experiment: ExperimentKind::Convergence,
            seed: 0,
            circuit: CircuitBlock { nqubits: if full { 8 } else { 6 }, layers: 3 },
            noise: ScaledTable { table: NoiseTable::default(), scales: vec![2.0, 4.0, 10.0] },
            optimizer: SgdBlock {
                iterations: 150,
                learning_rate: LearningRate::Constant { alpha: 0.01 },
                batch: 1,
                estimator: EstimatorKind::Sld,
                baseline: BaselinePolicy::Zero,
                shots: 200,
                init: Init::Uniform { half_width: std::f64::consts::PI / 8.0 },
            },
            trials: 10,
            analysis: AnalysisBlock { tail_window: 20, tolerance: 0.05 },
        }
    }
}

/// Headline statistics of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: String,
    /// Noise factor; 0 for the noiseless arm.
    pub scale: f64,
    /// Mean over trials of the tail-averaged exact cost.
    pub final_mean: f64,
    pub final_stderr: f64,
    /// `final_mean` minus the noiseless arm's, and its pooled standard error.
    pub gap: f64,
    pub gap_stderr: f64,
    /// First iteration after which the trial-mean exact cost stays within
    /// tolerance of `final_mean`.
    pub convergence_iteration: usize,
}

struct Arm {
    label: &'static str,
    scale: f64,
    traces: Vec<RunTrace>,
    summary: TrialSummary,
    /// `exact[t][i]`: exact cost of trial `t` at iteration `i`.
    exact: Vec<Vec<f64>>,
}

fn exact_costs(circuit: &ParametricCircuit, h: &PauliSum, traces: &[RunTrace]) -> Result<Vec<Vec<f64>>> {
    traces
        .iter()
        .map(|t| t.records.par_iter().map(|r| circuit.cost(&r.theta, h)).collect())
        .collect()
}

/// First index from which every entry of `curve` lies within
/// `tol·|target − curve[0]|` of `target`.
pub fn convergence_iteration(curve: &[f64], target: f64, tol: f64) -> usize {
    let Some(&start) = curve.first() else { return 0 };
    let band = tol * (target - start).abs();
    curve.iter().rposition(|c| (c - target).abs() > band).map_or(0, |i| i + 1)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let s = TrialSummary::from_series(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
    (s.mean[0], s.stderr[0])
}

fn report(arm: &Arm, window: usize, tol: f64, reference: Option<(f64, f64)>) -> ArmReport {
    let tails: Vec<f64> = arm
        .exact
        .iter()
        .map(|c| {
            let w = window.clamp(1, c.len());
            c[c.len() - w..].iter().sum::<f64>() / w as f64
        })
        .collect();
    let (final_mean, final_stderr) = mean_se(&tails);
    let n = arm.exact[0].len();
    let mean_curve: Vec<f64> =
        (0..n).map(|i| arm.exact.iter().map(|c| c[i]).sum::<f64>() / arm.exact.len() as f64).collect();
    let (ref_mean, ref_se) = reference.unwrap_or((final_mean, final_stderr));
    ArmReport {
        arm: arm.label.into(),
        scale: arm.scale,
        final_mean,
        final_stderr,
        gap: final_mean - ref_mean,
        gap_stderr: (final_stderr.powi(2) + ref_se.powi(2)).sqrt(),
        convergence_iteration: convergence_iteration(&mean_curve, final_mean, tol),
    }
}

fn validate(cfg: &ConvergenceConfig) -> Result<()> {
    if cfg.trials < 2 {
        return config_err("convergence needs at least 2 trials for error bars");
    }
    if cfg.noise.scales.is_empty() {
        return config_err("noise.scales is empty");
    }
    if let Some(f) = cfg.noise.scales.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return config_err(format!("scale {f} must be positive"));
    }
    if cfg.optimizer.shots == 0 {
        return config_err("convergence runs need a positive shot count");
    }
    if !(cfg.analysis.tolerance > 0.0 && cfg.analysis.tolerance < 1.0) {
        return config_err("analysis.tolerance must lie in (0, 1)");
    }
    Ok(())
}

pub(super) fn run(cfg: &ConvergenceConfig, echo: Value) -> Result<RunOutput> {
    validate(cfg)?;
    let spec = cfg.circuit.spec()?;
    let h = &spec.cost;
    let o = &cfg.optimizer;
    let opt = OptimizerConfig {
        iterations: o.iterations,
        learning_rate: o.learning_rate,
        batch: o.batch,
        estimator: o.estimator,
        baseline: o.baseline,
        shots: o.shots,
        seed: cfg.seed,
        init: o.init.clone(),
    };
    opt.validate()?;

    let mut out = ManifestBuilder::new(ExperimentKind::Convergence, cfg.seed, echo);
    let mut circuits = vec![("noiseless", 0.0, build_qaoa(&spec, &GateNoise::None)?)];
    for &f in &cfg.noise.scales {
        let dev = cfg.noise.table.scaled(f)?.device_noise(spec.nqubits)?;
        circuits.push(("noisy", f, build_qaoa(&spec, &GateNoise::Device(dev))?));
    }
    let mut arms = Vec::new();
    for (label, scale, circuit) in &circuits {
        if arms.is_empty() || *scale == cfg.noise.scales[0] {
            out.circuit(&format!("{label} scale={scale}"), circuit);
        }
        let (traces, summary) = multi_trial(circuit, h, &opt, cfg.trials)?;
        let exact = exact_costs(circuit, h, &traces)?;
        arms.push(Arm { label, scale: *scale, traces, summary, exact });
    }

    let mut raw = Csv::new(&["iter", "arm", "scale", "trial", "cost_sampled", "cost_exact"]);
    let mut summary = Csv::new(&["iter", "arm", "scale", "mean", "ci_low", "ci_high", "mean_exact"]);
    for arm in &arms {
        for (t, (trace, exact)) in arm.traces.iter().zip(&arm.exact).enumerate() {
            for (r, e) in trace.records.iter().zip(exact) {
                raw.row(&[r.iter.to_string(), arm.label.into(), num(arm.scale), t.to_string(), num(r.cost_sampled), num(*e)]);
            }
        }
        let s = &arm.summary;
        for i in 0..s.mean.len() {
            let mean_exact = arm.exact.iter().map(|c| c[i]).sum::<f64>() / arm.exact.len() as f64;
            summary.row(&[
                i.to_string(),
                arm.label.into(),
                num(arm.scale),
                num(s.mean[i]),
                num(s.ci_low[i]),
                num(s.ci_high[i]),
                num(mean_exact),
            ]);
        }
    }
    out.csv("convergence.csv", raw);
    out.csv("convergence_summary.csv", summary);

    let a = &cfg.analysis;
    let base = report(&arms[0], a.tail_window, a.tolerance, None);
    let reports: Vec<ArmReport> = std::iter::once(base.clone())
        .chain(arms[1..].iter().map(|arm| report(arm, a.tail_window, a.tolerance, Some((base.final_mean, base.final_stderr)))))
        .collect();
    let mut rep = Csv::new(&["arm", "scale", "final_mean", "final_stderr", "gap", "gap_stderr", "convergence_iteration"]);
    for r in &reports {
        rep.row(&[
            r.arm.clone(),
            num(r.scale),
            num(r.final_mean),
            num(r.final_stderr),
            num(r.gap),
            num(r.gap_stderr),
            r.convergence_iteration.to_string(),
        ]);
    }
    out.csv("convergence_report.csv", rep);
    out.checks = checks(&reports, cfg.noise.scales.as_slice(), h.op_norm_inf()?, &arms);
    Ok(out.finish(json!({ "arms": reports })))
}

fn checks(reports: &[ArmReport], scales: &[f64], h_norm: f64, arms: &[Arm]) -> Vec<Check> {
    let in_range = arms
        .iter()
        .flat_map(|a| a.exact.iter().flatten().chain(a.traces.iter().flat_map(|t| t.records.iter().map(|r| &r.cost_sampled))))
        .all(|c| c.abs() <= h_norm + 1e-9);
    let mut out = vec![Check::invariant("costs_within_observable_norm", in_range, format!("|C| <= {h_norm}"))];
    let noisy = &reports[1..];
    let ascending = scales.windows(2).all(|w| w[1] > w[0]);
    out.push(Check::trend(
        "gap_increases_with_scale",
        ascending && noisy.windows(2).all(|w| w[1].gap > w[0].gap),
        format!("gaps {:?}", noisy.iter().map(|r| r.gap).collect::<Vec<_>>()),
    ));
    let base_iter = reports[0].convergence_iteration.max(1) as f64;
    for r in noisy {
        let it = r.convergence_iteration.max(1) as f64;
        let ratio = (it / base_iter).max(base_iter / it);
        out.push(Check::trend(
            &format!("comparable_speed_scale_{}", r.scale),
            ratio <= 2.0,
            format!("iterations {} vs noiseless {}", r.convergence_iteration, reports[0].convergence_iteration),
        ));
    }
    if let Some(r) = noisy.iter().find(|r| r.scale == 2.0) {
        out.push(Check::trend(
            "scale_2_indistinguishable",
            r.gap.abs() <= 2.0 * r.gap_stderr,
            format!("gap {} vs 2 se {}", r.gap, 2.0 * r.gap_stderr),
        ));
    }
    if let Some(r) = noisy.iter().find(|r| r.scale == 10.0) {
        out.push(Check::trend(
            "scale_10_significant",
            r.gap > 2.0 * r.gap_stderr,
            format!("gap {} vs 2 se {}", r.gap, 2.0 * r.gap_stderr),
        ));
    }
    out
}
