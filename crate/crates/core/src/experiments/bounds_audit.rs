//! Exhaustive check of every error and gradient bound on small random
//! instances, with the measured slack of each inequality.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::CircuitBlock;
use super::noise_table::NoiseTable;
use super::{config_err, num, Check, Csv, ExperimentKind, ManifestBuilder, RunOutput};
use crate::ansatz::{build_qaoa, GateNoise, QaoaSpec};
use crate::bounds::{
    assembled_bound, bound_report, default_radius, err, fidelity_upper, halton_probes, peeling_upper,
    probe_stats_multi, qfi_bound_from_stats, ReportInputs,
};
use crate::estimators::{BaselinePolicy, EstimatorKind};
use crate::optimizer::{minimize_exact, MinimizeOptions};
use crate::{rng, Result};

/// Slack below which an inequality counts as violated.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBlock {
    pub instances: usize,
    /// Register sizes drawn uniformly.
    pub nqubits: Vec<usize>,
    pub max_layers: usize,
    /// Dephasing strengths and jitter-channel strengths are drawn in `[0, eta_max]`.
    pub eta_max: f64,
    /// Device-table factors are drawn in `[0, device_scale_max]`.
    pub device_scale_max: f64,
    /// Quasi-random probes per instance for the gradient bound.
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSweep {
    pub nqubits: usize,
    pub layers: Vec<usize>,
    pub eta: f64,
    /// Angle shared by every gate, so all gates of a kind are identical.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    pub circuit: CircuitBlock,
    pub eta: f64,
    pub probes: usize,
    /// Iteration counts at which the assembled bound is evaluated.
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsAuditConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub random: RandomBlock,
    pub depth_sweep: DepthSweep,
    pub report: ReportBlock,
}

impl BoundsAuditConfig {
    pub fn defaults(_full: bool) -> Self {
        BoundsAuditConfig {
            experiment: ExperimentKind::BoundsAudit,
            seed: 0,
            random: RandomBlock {
                instances: 100,
                nqubits: vec![3, 4],
                max_layers: 2,
                eta_max: 0.4,
                device_scale_max: 10.0,
                probes: 4,
            },
            depth_sweep: DepthSweep { nqubits: 3, layers: vec![1, 2, 3, 4], eta: 0.1, angle: 0.7 },
            report: ReportBlock {
                circuit: CircuitBlock { nqubits: 3, layers: 2 },
                eta: 0.1,
                probes: 16,
                iterations: vec![1, 10, 100, 1000, 10000],
            },
        }
    }
}

/// One audited inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub inequality: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl AuditRow {
    fn new(inequality: &str, instance: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        AuditRow { inequality: inequality.into(), instance: instance.into(), lhs, rhs }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn passed(&self) -> bool {
        self.slack() >= -AUDIT_TOL
    }
}

fn validate(cfg: &BoundsAuditConfig) -> Result<()> {
    let r = &cfg.random;
    if r.nqubits.is_empty() || r.nqubits.iter().any(|&n| !(3..=4).contains(&n)) {
        return config_err("random.nqubits must list sizes in [3, 4]");
    }
    if r.max_layers == 0 || r.probes == 0 {
        return config_err("random.max_layers and random.probes must be positive");
    }
    if !(0.0..=1.0).contains(&r.eta_max) || !(r.device_scale_max >= 0.0 && r.device_scale_max <= 25.0) {
        return config_err("random.eta_max must lie in [0, 1] and random.device_scale_max in [0, 25]");
    }
    let d = &cfg.depth_sweep;
    if d.layers.is_empty() || d.layers.contains(&0) || !(3..=4).contains(&d.nqubits) {
        return config_err("depth_sweep needs positive layer counts on 3 or 4 qubits");
    }
    if cfg.report.iterations.is_empty() || cfg.report.iterations.contains(&0) {
        return config_err("report.iterations must be positive");
    }
    Ok(())
}

/// Noise drawn for instance `i`. Instance 0 is noiseless.
fn draw_noise(r: &RandomBlock, i: usize, g: &mut rng::Rng, n: usize) -> Result<(String, GateNoise)> {
    if i == 0 {
        return Ok(("none".into(), GateNoise::None));
    }
    Ok(match i % 3 {
        0 => {
            let eta = g.random_range(0.0..=r.eta_max);
            (format!("z-dephasing eta={eta}"), GateNoise::ZDephasing { eta })
        }
        1 => {
            // σ with fluctuation strength (1 − e^{−2σ²})/2 up to eta_max.
            let eta = g.random_range(0.0..=r.eta_max).min(0.4999);
            let sigma = (-(1.0 - 2.0 * eta).ln() / 2.0).sqrt();
            (format!("gaussian sigma={sigma}"), GateNoise::GaussianFluctuation { sigma, samples: 16, seed: g.random() })
        }
        _ => {
            let f = g.random_range(0.0..=r.device_scale_max);
            (format!("device f={f}"), GateNoise::Device(NoiseTable::default().scaled(f)?.device_noise(n)?))
        }
    })
}

fn random_instance(cfg: &BoundsAuditConfig, i: usize) -> Result<Vec<AuditRow>> {
    let r = &cfg.random;
    let mut g = rng::rng(rng::derive_path(cfg.seed, &[1, i as u64]));
    let n = r.nqubits[g.random_range(0..r.nqubits.len())];
    let layers = g.random_range(1..=r.max_layers);
    let spec = QaoaSpec::ring(n, layers)?;
    let (label, noise) = draw_noise(r, i, &mut g, n)?;
    let ideal = build_qaoa(&spec, &GateNoise::None)?;
    let noisy = build_qaoa(&spec, &noise)?;
    let p = spec.nparams();
    let theta: Vec<f64> = (0..p).map(|_| g.random_range(0.0..std::f64::consts::TAU)).collect();
    // Half the instances compare equal angles, the rest independent ones.
    let vartheta: Vec<f64> = if i % 2 == 0 { theta.clone() } else { (0..p).map(|_| g.random_range(0.0..std::f64::consts::TAU)).collect() };
    let tag = format!("{i} n={n} layers={layers} {label}");
    let h = &spec.cost;

    let e = err(&noisy, &vartheta, &ideal, &theta, h)?;
    let peel = peeling_upper(&noisy, &vartheta, &ideal, &theta, h)?;
    let fid = fidelity_upper(&ideal.evolve_pure(&theta)?, &noisy.evolve(&vartheta)?, h)?;
    let choi_gap = peel.per_gate_lower.iter().zip(&peel.per_gate).map(|(l, u)| l - u).fold(f64::NEG_INFINITY, f64::max);
    let probes = halton_probes(r.probes, p, rng::derive_path(cfg.seed, &[2, i as u64]))?;
    let kinds = [EstimatorKind::Sld, EstimatorKind::Ld];
    let (stats, _) = probe_stats_multi(&noisy, &probes, h, &kinds, BaselinePolicy::Zero, rng::derive_path(cfg.seed, &[3, i as u64]))?;
    let g_bound = qfi_bound_from_stats(p, h.op_norm_inf()?, &stats[0]);
    let worst = |k: usize| stats[k].iter().map(|s| s.second_moment).fold(0.0, f64::max).sqrt();

    let mut rows = vec![
        AuditRow::new("err_le_fidelity_upper", &tag, e, fid),
        AuditRow::new("err_le_peeling_upper", &tag, e, peel.sum_form),
        AuditRow::new("peeling_sum_le_max_form", &tag, peel.sum_form, peel.max_form),
        AuditRow::new("choi_lower_le_upper", &tag, choi_gap, 0.0),
        AuditRow::new("g2_sld_le_qfi_bound", &tag, worst(0), g_bound),
        AuditRow::new("g2_ld_le_qfi_bound", &tag, worst(1), g_bound),
    ];
    if noise.is_none() && i % 2 == 0 {
        rows.push(AuditRow::new("noiseless_err_vanishes", &tag, e.abs(), 0.0));
        rows.push(AuditRow::new("noiseless_peeling_vanishes", &tag, peel.sum_form, 0.0));
    }
    Ok(rows)
}

/// Peeling bound per gate at each depth, relative to the shallowest depth.
fn depth_rows(d: &DepthSweep) -> Result<(Vec<AuditRow>, Vec<(usize, f64)>)> {
    let bounds = d
        .layers
        .par_iter()
        .map(|&layers| {
            let spec = QaoaSpec::ring(d.nqubits, layers)?;
            let ideal = build_qaoa(&spec, &GateNoise::None)?;
            let noisy = build_qaoa(&spec, &GateNoise::ZDephasing { eta: d.eta })?;
            let theta = vec![d.angle; spec.nparams()];
            Ok((spec.nparams(), peeling_upper(&noisy, &theta, &ideal, &theta, &spec.cost)?.sum_form))
        })
        .collect::<Result<Vec<_>>>()?;
    let (p0, b0) = bounds[0];
    let per_gate = b0 / p0 as f64;
    let rows = bounds
        .iter()
        .map(|&(p, b)| {
            // Exact linearity: the deviation from the scaled shallow bound.
            let dev = (b / p as f64 - per_gate).abs() / per_gate.max(f64::MIN_POSITIVE);
            AuditRow::new("peeling_linear_in_depth", format!("P={p}"), dev, AUDIT_TOL)
        })
        .collect();
    Ok((rows, bounds))
}

pub(super) fn run(cfg: &BoundsAuditConfig, echo: Value) -> Result<RunOutput> {
    validate(cfg)?;
    let mut out = ManifestBuilder::new(ExperimentKind::BoundsAudit, cfg.seed, echo);
    let mut rows: Vec<AuditRow> = (0..cfg.random.instances)
        .into_par_iter()
        .map(|i| random_instance(cfg, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let (depth, depth_bounds) = depth_rows(&cfg.depth_sweep)?;
    rows.extend(depth);

    // Assembled bound at a located optimum pair.
    let rb = &cfg.report;
    let spec = rb.circuit.spec()?;
    if spec.nqubits > 4 {
        return config_err("report.circuit.nqubits must be at most 4");
    }
    let ideal = build_qaoa(&spec, &GateNoise::None)?;
    let noisy = build_qaoa(&spec, &GateNoise::ZDephasing { eta: rb.eta })?;
    out.circuit("report noiseless", &ideal);
    out.circuit("report noisy", &noisy);
    let opts = MinimizeOptions { restarts: 4, seed: rng::derive(cfg.seed, 4), ..MinimizeOptions::default() };
    let theta_opt = minimize_exact(&ideal, &spec.cost, &opts)?.theta;
    let vartheta_opt = minimize_exact(&noisy, &spec.cost, &opts)?.theta;
    let mut probes = halton_probes(rb.probes, spec.nparams(), rng::derive(cfg.seed, 5))?;
    probes.push(theta_opt.clone());
    probes.push(vartheta_opt.clone());
    let report = bound_report(&ReportInputs {
        noisy: &noisy,
        ideal: &ideal,
        h: &spec.cost,
        theta_opt: &theta_opt,
        vartheta_opt: &vartheta_opt,
        probes: &probes,
        estimator: EstimatorKind::Sld,
        policy: BaselinePolicy::Zero,
        radius: default_radius(spec.nparams()),
        seed: rng::derive(cfg.seed, 6),
    })?;
    rows.push(AuditRow::new("report_err_le_fidelity_upper", "report", report.err, report.err_fidelity_upper));
    rows.push(AuditRow::new("report_err_le_peeling_upper", "report", report.err, report.err_peeling_upper));
    rows.push(AuditRow::new("report_g2_le_qfi_bound", "report", report.g2_empirical, report.g2_qfi_upper));
    let mut iters = rb.iterations.clone();
    iters.sort_unstable();
    let assembled = iters.iter().map(|&i| assembled_bound(report.err, report.g2_qfi_upper, report.radius, i)).collect::<Result<Vec<_>>>()?;
    for (w, i) in assembled.windows(2).zip(iters.windows(2)) {
        rows.push(AuditRow::new("assembled_non_increasing", format!("I={}->{}", i[0], i[1]), w[1], w[0]));
    }

    let mut csv = Csv::new(&["inequality", "instance", "lhs", "rhs", "slack", "pass"]);
    for r in &rows {
        csv.row(&[r.inequality.clone(), r.instance.clone(), num(r.lhs), num(r.rhs), num(r.slack()), r.passed().to_string()]);
    }
    out.csv("bounds_audit.csv", csv);
    let mut record = report.to_record();
    for (i, a) in iters.iter().zip(&assembled) {
        record.push_str(&format!("assembled_I{i}={a:.16e}\n"));
    }
    out.files.push(super::OutputFile { name: "bound_report.txt".into(), contents: record });
    out.outputs.push(super::OutputEntry { file: "bound_report.txt".into(), rows: 0 });

    let mut names: Vec<&str> = Vec::new();
    for r in &rows {
        if !names.contains(&r.inequality.as_str()) {
            names.push(&r.inequality);
        }
    }
    for name in names {
        let of: Vec<&AuditRow> = rows.iter().filter(|r| r.inequality == name).collect();
        let failed = of.iter().filter(|r| !r.passed()).count();
        let min_slack = of.iter().map(|r| r.slack()).fold(f64::INFINITY, f64::min);
        out.checks.push(Check::invariant(
            name,
            failed == 0,
            format!("{} cases, {failed} failed, min slack {min_slack:e}", of.len()),
        ));
    }
    let summary = json!({
        "rows": rows.len(),
        "failed": rows.iter().filter(|r| !r.passed()).count(),
        "depth_sweep": depth_bounds.iter().map(|(p, b)| json!({"nparams": p, "peeling_upper": b})).collect::<Vec<_>>(),
        "report": report,
        "assembled": iters.iter().zip(&assembled).map(|(i, a)| json!({"iterations": i, "bound": a})).collect::<Vec<_>>(),
    });
    Ok(out.finish(summary))
}
