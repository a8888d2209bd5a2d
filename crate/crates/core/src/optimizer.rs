//! Stochastic gradient descent with iterate averaging.
//!
//! A run evaluates one (mini-batched) gradient estimate per iteration and
//! steps `θ ← θ − α g`. The quantity of interest is the exact cost at the
//! averaged iterate `θ̄ = (1/I) Σ_i θ^{(i)}`.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::ParametricCircuit;
use crate::estimators::{sample_cost, sample_gradient, BaselinePolicy, EstimatorKind};
use crate::pauli::PauliSum;
use crate::{rng, Error, Result};

/// Runs abort once `‖θ‖` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e3;

/// Step size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearningRate {
    Constant { alpha: f64 },
    /// `α = R / (G √I)`, the rate that balances the averaged-iterate bound.
    Schedule { radius: f64, gradient_bound: f64 },
}

impl LearningRate {
    pub fn alpha(&self, iterations: usize) -> f64 {
        match *self {
            LearningRate::Constant { alpha } => alpha,
            LearningRate::Schedule { radius, gradient_bound } => radius / (gradient_bound * (iterations as f64).sqrt()),
        }
    }
}

/// Starting point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Init {
    #[default]
    Zero,
    /// Independent uniform draws in `[−half_width, half_width]`.
    Uniform { half_width: f64 },
    Fixed { theta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub learning_rate: LearningRate,
    #[serde(default = "one")]
    pub batch: usize,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub baseline: BaselinePolicy,
    /// Shots per gradient estimate and per recorded cost. Zero selects exact
    /// values, which turns the run into plain gradient descent.
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
}

fn one() -> usize {
    1
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Sld
}

impl OptimizerConfig {
    /// Exact gradient descent with a constant step.
    pub fn exact(iterations: usize, alpha: f64) -> Self {
        OptimizerConfig {
            iterations,
            learning_rate: LearningRate::Constant { alpha },
            batch: 1,
            estimator: EstimatorKind::Sld,
            baseline: BaselinePolicy::Zero,
            shots: 0,
            seed: 0,
            init: Init::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        let ok = match self.learning_rate {
            LearningRate::Constant { alpha } => alpha > 0.0 && alpha.is_finite(),
            LearningRate::Schedule { radius, gradient_bound } => {
                radius > 0.0 && gradient_bound > 0.0 && radius.is_finite() && gradient_bound.is_finite()
            }
        };
        if !ok {
            return Err(Error::Config(format!("invalid learning rate {:?}", self.learning_rate)));
        }
        if let Init::Uniform { half_width } = self.init {
            if !(half_width >= 0.0 && half_width.is_finite()) {
                return Err(Error::Config(format!("invalid init half-width {half_width}")));
            }
        }
        Ok(())
    }

    fn initial_theta(&self, nparams: usize) -> Result<Vec<f64>> {
        match &self.init {
            Init::Zero => Ok(vec![0.0; nparams]),
            Init::Uniform { half_width } => {
                let mut r = rng::rng(rng::derive(self.seed, 0));
                Ok((0..nparams).map(|_| r.random_range(-1.0..=1.0) * half_width).collect())
            }
            Init::Fixed { theta } if theta.len() == nparams => Ok(theta.clone()),
            Init::Fixed { theta } => Err(Error::ParameterCount { expected: nparams, found: theta.len() }),
        }
    }
}

/// State of one iteration, taken before the update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub theta: Vec<f64>,
    pub cost_sampled: f64,
    pub grad_norm_sampled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    /// `(1/I) Σ_i θ^{(i)}`.
    pub averaged_theta: Vec<f64>,
    /// Exact cost at the averaged iterate.
    pub final_exact_cost: f64,
    /// Parameters after the last update.
    pub last_theta: Vec<f64>,
    pub seed: u64,
    pub config: OptimizerConfig,
}

impl RunTrace {
    /// Header `iter,cost_sampled,grad_norm_sampled,theta_1..theta_P` and one row
    /// per iteration.
    pub fn to_csv(&self) -> String {
        let p = self.averaged_theta.len();
        let mut out = String::from("iter,cost_sampled,grad_norm_sampled");
        for j in 1..=p {
            out.push_str(&format!(",theta_{j}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{:.16e},{:.16e}", r.iter, r.cost_sampled, r.grad_norm_sampled));
            for t in &r.theta {
                out.push_str(&format!(",{t:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs SGD from the configured start.
pub fn sgd_run(circuit: &ParametricCircuit, h: &PauliSum, config: &OptimizerConfig) -> Result<RunTrace> {
    config.validate()?;
    if config.estimator == EstimatorKind::Hadamard && !circuit.is_noiseless() {
        return Err(Error::UnsupportedEstimator("the Hadamard test needs a noiseless circuit".into()));
    }
    let p = circuit.nparams();
    let alpha = config.learning_rate.alpha(config.iterations);
    let mut theta = config.initial_theta(p)?;
    let mut sum = vec![0.0; p];
    let mut records = Vec::with_capacity(config.iterations);

    for i in 0..config.iterations {
        let n = norm(&theta);
        if !(n <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { iteration: i, norm: n });
        }
        let (cost, grad) = if config.shots == 0 {
            circuit.cost_and_gradient(&theta, h)?
        } else {
            let cost = sample_cost(circuit, &theta, h, config.shots, rng::derive_path(config.seed, &[1, i as u64]))?;
            let mut grad = vec![0.0; p];
            for b in 0..config.batch {
                let seed = rng::derive_path(config.seed, &[2, i as u64, b as u64]);
                let g = sample_gradient(config.estimator, circuit, &theta, h, config.shots, config.baseline, seed)?;
                for (a, v) in grad.iter_mut().zip(&g.values) {
                    *a += v;
                }
            }
            grad.iter_mut().for_each(|g| *g /= config.batch as f64);
            (cost, grad)
        };
        records.push(IterationRecord { iter: i, theta: theta.clone(), cost_sampled: cost, grad_norm_sampled: norm(&grad) });
        for (s, t) in sum.iter_mut().zip(&theta) {
            *s += t;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= alpha * g;
        }
    }
    let n = norm(&theta);
    if !(n <= DIVERGENCE_NORM) {
        return Err(Error::Diverged { iteration: config.iterations, norm: n });
    }
    let averaged_theta: Vec<f64> = sum.iter().map(|s| s / config.iterations as f64).collect();
    let final_exact_cost = circuit.cost(&averaged_theta, h)?;
    Ok(RunTrace { records, averaged_theta, final_exact_cost, last_theta: theta, seed: config.seed, config: config.clone() })
}

/// `C(θ̄) − C_opt`, with `C` evaluated exactly.
pub fn averaged_accuracy(trace: &RunTrace, exact_opt_cost: f64) -> f64 {
    trace.final_exact_cost - exact_opt_cost
}

/// Per-iteration statistics of the sampled cost across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub mean: Vec<f64>,
    /// Standard error of the mean; zero for a single trial.
    pub stderr: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

impl TrialSummary {
    pub fn from_series(series: &[Vec<f64>]) -> Self {
        let len = series.iter().map(Vec::len).min().unwrap_or(0);
        let k = series.len() as f64;
        let mut s = TrialSummary { mean: vec![], stderr: vec![], ci_low: vec![], ci_high: vec![] };
        for i in 0..len {
            let mean = series.iter().map(|v| v[i]).sum::<f64>() / k;
            let se = if series.len() > 1 {
                let var = series.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            s.mean.push(mean);
            s.stderr.push(se);
            s.ci_low.push(mean - 1.96 * se);
            s.ci_high.push(mean + 1.96 * se);
        }
        s
    }
}

/// Seed of trial `t` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive_path(seed, &[0x7472_6961_6c, trial as u64])
}

/// `trials` independent runs with derived seeds, executed in parallel.
pub fn multi_trial(
    circuit: &ParametricCircuit,
    h: &PauliSum,
    config: &OptimizerConfig,
    trials: usize,
) -> Result<(Vec<RunTrace>, TrialSummary)> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let traces = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut c = config.clone();
            c.seed = trial_seed(config.seed, t);
            sgd_run(circuit, h, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<Vec<f64>> = traces.iter().map(|t| t.records.iter().map(|r| r.cost_sampled).collect()).collect();
    let summary = TrialSummary::from_series(&series);
    Ok((traces, summary))
}

/// Settings for deterministic local minimization of the exact cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { restarts: 8, max_iterations: 500, gradient_tol: 1e-9, seed: 0 }
    }
}

const MAX_BFGS_STEP: f64 = 1.0;

/// A located minimum of the exact cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub gradient_norm: f64,
}

/// BFGS with Armijo backtracking from a single start.
fn bfgs(circuit: &ParametricCircuit, h: &PauliSum, start: Vec<f64>, opts: &MinimizeOptions) -> Result<Minimum> {
    let p = start.len();
    let mut x = start;
    let (mut f, mut g) = circuit.cost_and_gradient(&x, h)?;
    let mut hinv = vec![vec![0.0; p]; p];
    let reset = |m: &mut Vec<Vec<f64>>| {
        for (i, row) in m.iter_mut().enumerate() {
            row.iter_mut().enumerate().for_each(|(j, v)| *v = if i == j { 1.0 } else { 0.0 });
        }
    };
    reset(&mut hinv);
    for _ in 0..opts.max_iterations {
        if norm(&g) < opts.gradient_tol {
            break;
        }
        let mut dir: Vec<f64> = hinv.iter().map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            reset(&mut hinv);
            dir = g.iter().map(|v| -v).collect();
            slope = -norm(&g).powi(2);
        }
        // Parameters enter through 2π-periodic-scale rotations; longer steps
        // only hop between equivalent basins.
        let mut step = (MAX_BFGS_STEP / norm(&dir)).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (ft, gt) = circuit.cost_and_gradient(&trial, h)?;
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-14 {
            let hy: Vec<f64> = hinv.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..p {
                for j in 0..p {
                    hinv[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let done = (f - fnew).abs() <= 1e-15 * (1.0 + f.abs());
        x = xn;
        f = fnew;
        g = gn;
        if done {
            break;
        }
    }
    Ok(Minimum { gradient_norm: norm(&g), theta: x, cost: f })
}

/// Lowest exact cost found by BFGS from `θ = 0` and `restarts` uniform
/// starts in `[0, 2π)^P`. Restarts run in parallel; the result is
/// deterministic for a fixed seed.
pub fn minimize_exact(circuit: &ParametricCircuit, h: &PauliSum, opts: &MinimizeOptions) -> Result<Minimum> {
    let p = circuit.nparams();
    let starts: Vec<Vec<f64>> = std::iter::once(vec![0.0; p])
        .chain((0..opts.restarts).map(|r| {
            let mut g = rng::rng(rng::derive(opts.seed, r as u64));
            (0..p).map(|_| g.random_range(0.0..std::f64::consts::TAU)).collect()
        }))
        .collect();
    minimize_from(circuit, h, starts, opts)
}

/// Lowest exact cost found by BFGS from each of `starts`, run in parallel.
pub fn minimize_from(circuit: &ParametricCircuit, h: &PauliSum, starts: Vec<Vec<f64>>, opts: &MinimizeOptions) -> Result<Minimum> {
    if starts.is_empty() {
        return Err(Error::param("minimization needs at least one start"));
    }
    let found = starts.into_par_iter().map(|s| bfgs(circuit, h, s, opts)).collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().min_by(|a, b| a.cost.total_cmp(&b.cost)).expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_qaoa, GateNoise, QaoaSpec};

    fn ring(n: usize, layers: usize, noise: GateNoise) -> (ParametricCircuit, PauliSum) {
        let spec = QaoaSpec::ring(n, layers).unwrap();
        (build_qaoa(&spec, &noise).unwrap(), spec.cost.clone())
    }

    #[test]
    fn saddle_at_zero_is_a_fixed_point() {
        let (c, h) = ring(3, 1, GateNoise::None);
        let trace = sgd_run(&c, &h, &OptimizerConfig::exact(20, 0.1)).unwrap();
        assert!(trace.records.iter().all(|r| r.theta.iter().all(|&t| t == 0.0)));
        assert_eq!(trace.last_theta, vec![0.0, 0.0]);
    }

    #[test]
    fn average_and_record_count() {
        let (c, h) = ring(3, 1, GateNoise::ZDephasing { eta: 0.1 });
        let mut cfg = OptimizerConfig::exact(7, 0.05);
        cfg.shots = 50;
        cfg.init = Init::Uniform { half_width: 0.4 };
        cfg.seed = 11;
        let trace = sgd_run(&c, &h, &cfg).unwrap();
        assert_eq!(trace.records.len(), 7);
        for j in 0..2 {
            let mean = trace.records.iter().map(|r| r.theta[j]).sum::<f64>() / 7.0;
            assert!((mean - trace.averaged_theta[j]).abs() < 1e-12);
        }
        assert_eq!(trace, sgd_run(&c, &h, &cfg).unwrap());
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,cost_sampled,grad_norm_sampled,theta_1,theta_2\n"));
        assert_eq!(csv.lines().count(), 8);
    }

    #[test]
    fn exact_descent_is_monotone_for_small_step() {
        let (c, h) = ring(4, 2, GateNoise::None);
        // The largest Hessian eigenvalue at the optimum is about 83.8, so
        // steps below 2/83.8 descend monotonically.
        for seed in 0..4 {
            let mut cfg = OptimizerConfig::exact(300, 0.02);
            cfg.init = Init::Uniform { half_width: 1.0 };
            cfg.seed = seed;
            let trace = sgd_run(&c, &h, &cfg).unwrap();
            for w in trace.records.windows(2) {
                assert!(w[1].cost_sampled <= w[0].cost_sampled + 1e-12);
            }
        }
    }

    #[test]
    fn optimum_gives_zero_accuracy() {
        let (c, h) = ring(3, 1, GateNoise::None);
        let opt = minimize_exact(&c, &h, &MinimizeOptions::default()).unwrap();
        let mut cfg = OptimizerConfig::exact(5, 0.01);
        cfg.init = Init::Fixed { theta: opt.theta.clone() };
        let trace = sgd_run(&c, &h, &cfg).unwrap();
        assert!(averaged_accuracy(&trace, opt.cost).abs() < 1e-9);
        assert!(opt.gradient_norm < 1e-6);
    }

    #[test]
    fn divergence_guard_fires() {
        let (c, h) = ring(3, 1, GateNoise::None);
        let mut cfg = OptimizerConfig::exact(50, 1e5);
        cfg.init = Init::Fixed { theta: vec![0.3, 0.2] };
        assert!(matches!(sgd_run(&c, &h, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn hadamard_rejected_on_noisy_circuit() {
        let (c, h) = ring(3, 1, GateNoise::ZDephasing { eta: 0.1 });
        let mut cfg = OptimizerConfig::exact(2, 0.1);
        cfg.estimator = EstimatorKind::Hadamard;
        cfg.shots = 10;
        assert!(matches!(sgd_run(&c, &h, &cfg), Err(Error::UnsupportedEstimator(_))));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = OptimizerConfig::exact(0, 0.1);
        assert!(cfg.validate().is_err());
        cfg.iterations = 1;
        cfg.batch = 0;
        assert!(cfg.validate().is_err());
        cfg.batch = 1;
        cfg.learning_rate = LearningRate::Schedule { radius: 1.0, gradient_bound: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn schedule_rate() {
        let lr = LearningRate::Schedule { radius: 2.0, gradient_bound: 4.0 };
        assert!((lr.alpha(100) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn summary_statistics() {
        let s = TrialSummary::from_series(&[vec![1.0, 2.0], vec![3.0, 2.0]]);
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert!((s.stderr[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.stderr[1], 0.0);
        assert!((s.ci_high[0] - 3.96).abs() < 1e-12);
    }
}
