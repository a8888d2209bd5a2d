//! End-to-end acceptance criteria. Each test prints one `[PASS]`/`[FAIL]`
//! line (bypassing output capture) and then asserts the same condition.
//! The tests hold a shared lock so wall-clock limits are measured without
//! contention from each other.

use std::f64::consts::{PI, TAU};
use std::io::Write as _;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use noisy_vqo::bounds::{halton_probes, probe_stats_multi, qfi_bound_from_stats};
use noisy_vqo::estimators::{hadamard_test_gradient, solve_sld, StatePoint};
use noisy_vqo::experiments::config::Value;
use noisy_vqo::experiments::{self, ExperimentKind, RunOptions, RunOutput};
use noisy_vqo::linalg;
use noisy_vqo::optimizer::{sgd_run, trial_seed, Init, OptimizerConfig};
use noisy_vqo::{
    build_qaoa, rng, transverse_mixer, BaselinePolicy, EstimatorKind, GateNoise, ParametricCircuit, PauliSum, QaoaSpec,
    C64,
};
use rand::Rng as _;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) -> bool {
    let in_time = elapsed < limit;
    let passed = ok && in_time;
    let status = if passed { "PASS" } else { "FAIL" };
    let line = format!(
        "[{status}] criterion {id} {name}: {detail}; {:.1}s (limit {}s{})\n",
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(line.as_bytes());
    let _ = err.flush();
    passed
}

fn random_theta(g: &mut impl rand::Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| g.random_range(0.0..TAU)).collect()
}

fn ring(n: usize, layers: usize, noise: &GateNoise) -> (ParametricCircuit, PauliSum) {
    let spec = QaoaSpec::ring(n, layers).unwrap();
    (build_qaoa(&spec, noise).unwrap(), spec.cost)
}

fn dephasing(eta: f64) -> GateNoise {
    if eta == 0.0 {
        GateNoise::None
    } else {
        GateNoise::ZDephasing { eta }
    }
}

fn run_default(kind: ExperimentKind) -> RunOutput {
    let empty = Value::Object(Default::default());
    experiments::run(kind, empty, &RunOptions::default()).unwrap()
}

fn checks_pass(out: &RunOutput, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in names {
        let c = out.check(name);
        let passed = c.is_some_and(|c| c.passed);
        ok &= passed;
        detail.push(format!("{name}={}", c.map_or("missing".to_string(), |c| c.detail.clone())));
    }
    (ok, detail.join(", "))
}

#[test]
fn criterion_01_sld_solves_lyapunov_equation() {
    let _g = serial();
    let start = Instant::now();
    let mut g = rng::rng(101);
    let (mut worst_res, mut worst_tr) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = g.random_range(2..=3);
        let layers = g.random_range(1..=2);
        let eta = g.random_range(0.0..=0.4);
        let circuit = if n == 2 {
            let spec = edge_spec(layers);
            build_qaoa(&spec, &dephasing(eta)).unwrap()
        } else {
            ring(n, layers, &dephasing(eta)).0
        };
        let theta = random_theta(&mut g, circuit.nparams());
        let (rho, derivs) = circuit.evolve_with_derivatives(&theta).unwrap();
        for d in &derivs {
            let sld = solve_sld(&rho, d).unwrap();
            let sym = (&sld.l * rho.matrix() + rho.matrix() * &sld.l) * C64::new(0.5, 0.0);
            worst_res = worst_res.max(linalg::frobenius(&(sym - d)));
            worst_tr = worst_tr.max(linalg::trace_product(rho.matrix(), &sld.l).norm());
        }
    }
    let ok = worst_res <= 1e-9 && worst_tr <= 1e-9;
    let detail = format!("max residual {worst_res:.2e}, max |Tr[rho L]| {worst_tr:.2e}");
    assert!(report(1, "sld_correctness", ok, start.elapsed(), Duration::from_secs(10), &detail));
}

/// Two qubits coupled by a single `ZZ` edge with the transverse mixer.
fn edge_spec(layers: usize) -> QaoaSpec {
    QaoaSpec { nqubits: 2, layers, cost: PauliSum::parse("1 ZZ").unwrap(), mixer: transverse_mixer(2).unwrap() }
}

#[test]
fn criterion_02_estimators_are_unbiased() {
    let _g = serial();
    let start = Instant::now();
    let spec = edge_spec(1);
    let h = spec.cost.clone();
    let mut g = rng::rng(202);
    let (mut worst_exact, mut worst_fd) = (0.0f64, 0.0f64);
    for &eta in &[0.0, 0.1, 0.3] {
        let circuit = build_qaoa(&spec, &dephasing(eta)).unwrap();
        for _ in 0..8 {
            let theta = random_theta(&mut g, 2);
            let pt = StatePoint::new(&circuit, &theta, &h).unwrap();
            let exact = pt.gradient();
            let slds = pt.slds().unwrap();
            let ld = pt.ld_outcomes().unwrap();
            for j in 0..2 {
                let step = 1e-5;
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += step;
                down[j] -= step;
                let fd = (circuit.cost(&up, &h).unwrap() - circuit.cost(&down, &h).unwrap()) / (2.0 * step);
                let mut means = Vec::new();
                for lambda in [0.0, 0.7] {
                    let outcomes = pt.sld_outcomes(&slds[j], lambda).unwrap();
                    means.push(outcomes.iter().map(|(v, p)| v * p).sum::<f64>());
                }
                // Σ_y p_y · E_y ∂log p_y, skipping outcomes of zero probability.
                means.push(ld.iter().filter(|(p, _, _)| *p > 0.0).map(|(_, e, dp)| e * dp[j]).sum());
                for m in means {
                    worst_exact = worst_exact.max((m - exact[j]).abs());
                    worst_fd = worst_fd.max((m - fd).abs());
                }
            }
        }
    }
    let ok = worst_exact <= 1e-8 && worst_fd <= 1e-5;
    let detail = format!("max |E[g] - Tr[H drho]| {worst_exact:.2e}, max |E[g] - central difference| {worst_fd:.2e}");
    assert!(report(2, "gradient_unbiasedness", ok, start.elapsed(), Duration::from_secs(10), &detail));
}

#[test]
fn criterion_03_qfi_bound_holds() {
    let _g = serial();
    let start = Instant::now();
    let probes = halton_probes(50, 8, 303).unwrap();
    let mut ok = true;
    let mut margins = Vec::new();
    for &eta in &[0.0, 0.1, 0.2, 0.3] {
        let (circuit, h) = ring(4, 4, &dephasing(eta));
        let kinds = [EstimatorKind::Sld, EstimatorKind::Ld];
        let (stats, _) = probe_stats_multi(&circuit, &probes, &h, &kinds, BaselinePolicy::Zero, 0).unwrap();
        let bound = qfi_bound_from_stats(circuit.nparams(), h.op_norm_inf().unwrap(), &stats[0]);
        for s in &stats {
            let worst = s.iter().map(|p| p.second_moment).fold(0.0, f64::max).sqrt();
            ok &= worst <= bound + 1e-9;
            margins.push(bound - worst);
        }
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!("smallest margin {min_margin:.3} over 4 noise levels and 2 estimators");
    assert!(report(3, "qfi_bound", ok, start.elapsed(), Duration::from_secs(120), &detail));
}

#[test]
fn criterion_04_second_moment_and_error_trends() {
    let _g = serial();
    let start = Instant::now();
    let out = run_default(ExperimentKind::QfiScan);
    let cfg = &out.manifest.config;
    let shape_ok = cfg["circuit"]["nqubits"] == 6
        && cfg["circuit"]["layers"] == 10
        && cfg["noise"]["etas"].as_array().map(Vec::len) == Some(9);
    let (ok, detail) = checks_pass(
        &out,
        &["sld_moment_non_increasing", "ld_moment_non_increasing", "err_opt_non_decreasing", "err_opt_vanishes_without_noise"],
    );
    assert!(report(4, "moment_and_error_trends", ok && shape_ok, start.elapsed(), Duration::from_secs(15 * 60), &detail));
}

#[test]
fn criterion_05_exact_ansatz_reaches_ground_energy() {
    let _g = serial();
    let start = Instant::now();
    let (circuit, h) = ring(4, 2, &GateNoise::None);
    let mut best = f64::INFINITY;
    for r in 0..8 {
        let mut cfg = OptimizerConfig::exact(2000, 0.02);
        cfg.init = Init::Uniform { half_width: PI };
        cfg.seed = trial_seed(505, r);
        let trace = sgd_run(&circuit, &h, &cfg).unwrap();
        best = best.min(circuit.cost(&trace.last_theta, &h).unwrap());
    }
    let ok = (best + 4.0).abs() <= 1e-3;
    let detail = format!("best final cost {best:.6} over 8 restarts (alpha 0.02, 2000 steps)");
    assert!(report(5, "exact_ansatz_convergence", ok, start.elapsed(), Duration::from_secs(60), &detail));
}

#[test]
fn criterion_06_noisy_convergence_trends() {
    let _g = serial();
    let start = Instant::now();
    let out = run_default(ExperimentKind::Convergence);
    let cfg = &out.manifest.config;
    let shape_ok = cfg["circuit"]["nqubits"] == 6
        && cfg["circuit"]["layers"] == 3
        && cfg["optimizer"]["shots"] == 200
        && cfg["trials"] == 10
        && cfg["noise"]["scales"] == serde_json::json!([2.0, 4.0, 10.0]);
    let (ok, detail) = checks_pass(
        &out,
        &["gap_increases_with_scale", "comparable_speed_scale_2", "comparable_speed_scale_4", "comparable_speed_scale_10"],
    );
    assert!(report(6, "noisy_convergence_trends", ok && shape_ok, start.elapsed(), Duration::from_secs(30 * 60), &detail));
}

#[test]
fn criterion_07_fluctuation_channel() {
    let _g = serial();
    let start = Instant::now();
    let out = run_default(ExperimentKind::ChannelValidate);
    let fl = &out.manifest.config["fluctuation"];
    let shape_ok = fl["quadrature_nodes"] == 32 && fl["quadrature_tol"] == 1e-8 && fl["mc_samples"] == 10_000 && fl["mc_tol"] == 0.05;
    let (ok, detail) = checks_pass(&out, &["quadrature_choi_max_diff", "monte_carlo_trace_distance"]);
    assert!(report(7, "fluctuation_channel", ok && shape_ok, start.elapsed(), Duration::from_secs(60), &detail));
}

#[test]
fn criterion_08_error_bound_chain() {
    let _g = serial();
    let start = Instant::now();
    let out = run_default(ExperimentKind::BoundsAudit);
    let random = &out.manifest.config["random"];
    let shape_ok = random["instances"] == 100 && random["nqubits"].as_array().is_some_and(|a| a.iter().all(|n| n.as_u64() <= Some(4)));
    let (ok, detail) = checks_pass(&out, &["err_le_fidelity_upper", "err_le_peeling_upper", "peeling_linear_in_depth"]);
    assert!(report(8, "error_bound_chain", ok && shape_ok, start.elapsed(), Duration::from_secs(120), &detail));
}

#[test]
fn criterion_09_optimal_baseline() {
    let _g = serial();
    let start = Instant::now();
    let mut g = rng::rng(909);
    let (mut worst_gain, mut worst_fit) = (f64::NEG_INFINITY, 0.0f64);
    for i in 0..50 {
        let layers = g.random_range(1..=2);
        let noise = match i % 3 {
            0 => dephasing(g.random_range(0.0..=0.4)),
            1 => GateNoise::GaussianFluctuation { sigma: g.random_range(0.0..=0.6), samples: 16, seed: i },
            _ => GateNoise::None,
        };
        let (circuit, h) = ring(3, layers, &noise);
        let theta = random_theta(&mut g, circuit.nparams());
        let pt = StatePoint::new(&circuit, &theta, &h).unwrap();
        let at = |policy| pt.sld_second_moments(policy).unwrap();
        let zero = at(BaselinePolicy::Zero);
        let best = at(BaselinePolicy::Optimal);
        let (minus, plus) = (at(BaselinePolicy::Fixed(-1.0)), at(BaselinePolicy::Fixed(1.0)));
        let qfi = pt.qfi().unwrap();
        for j in 0..zero.len() {
            worst_gain = worst_gain.max(best[j] - zero[j]);
            let curvature = (plus[j] + minus[j] - 2.0 * zero[j]) / 2.0;
            worst_fit = worst_fit.max((curvature - qfi[j]).abs());
        }
    }
    let ok = worst_gain <= 1e-12 && worst_fit <= 1e-8;
    let detail = format!("max E[g^2](opt) - E[g^2](0) {worst_gain:.2e}, max parabola QFI error {worst_fit:.2e}");
    assert!(report(9, "baseline_optimality", ok, start.elapsed(), Duration::from_secs(60), &detail));
}

#[test]
fn criterion_10_hadamard_test_gradient() {
    let _g = serial();
    let start = Instant::now();
    let (circuit, h) = ring(3, 1, &GateNoise::None);
    let mut g = rng::rng(1010);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta = random_theta(&mut g, 2);
        let exact = StatePoint::new(&circuit, &theta, &h).unwrap().gradient();
        let had = hadamard_test_gradient(&circuit, &theta, &h, 0, 0).unwrap();
        for (a, b) in had.values.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    let ok = worst <= 1e-9;
    let detail = format!("max deviation {worst:.2e} over 20 parameter points");
    assert!(report(10, "hadamard_test_gradient", ok, start.elapsed(), Duration::from_secs(30), &detail));
}
