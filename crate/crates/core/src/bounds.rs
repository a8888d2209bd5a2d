//! Error and convergence bounds for noisy variational optimization.
//!
//! The accuracy of averaged SGD on the noisy cost is bounded by
//! `Err(θ_opt, ϑ_opt) + R·G/√I`, where `Err` is the gap between the best
//! noisy and best noiseless cost and `G` caps the root second moment of the
//! gradient estimator. `Err` is bounded by per-gate channel distances
//! (peeling) or by the fidelity; `G` is bounded by `√P ‖H‖ max √QFI`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::ParametricCircuit;
use crate::channels::{choi_distance_bounds, choi_of};
use crate::estimators::{
    hadamard_second_moments, BaselinePolicy, EstimatorKind, StatePoint,
};
use crate::pauli::PauliSum;
use crate::state::{BornDistribution, DensityMatrix, PureState};
use crate::{rng, Error, Result};

/// Registers above this size use sampled second moments.
pub const ENUMERATION_QUBIT_CAP: usize = 8;

/// Shots for the sampled second-moment fallback.
pub const FALLBACK_SHOTS: usize = 100_000;

/// `Err(θ, ϑ) = C_noisy(ϑ) − C(θ)`.
pub fn err(noisy: &ParametricCircuit, vartheta: &[f64], ideal: &ParametricCircuit, theta: &[f64], h: &PauliSum) -> Result<f64> {
    if noisy.nqubits() != ideal.nqubits() {
        return Err(Error::DimensionMismatch { expected: ideal.nqubits(), found: noisy.nqubits() });
    }
    Ok(noisy.cost(vartheta, h)? - ideal.cost(theta, h)?)
}

/// Peeling bound on `Err`, from per-gate Choi upper bounds on the diamond
/// distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeelingBound {
    /// `‖H‖ Σ_k ‖E_k − U_k‖`.
    pub sum_form: f64,
    /// `‖H‖ P max_k ‖E_k − U_k‖`.
    pub max_form: f64,
    /// Choi upper bound for each gate.
    pub per_gate: Vec<f64>,
    /// Choi lower bound for each gate.
    pub per_gate_lower: Vec<f64>,
}

pub fn peeling_upper(
    noisy: &ParametricCircuit,
    vartheta: &[f64],
    ideal: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
) -> Result<PeelingBound> {
    if noisy.nparams() != ideal.nparams() {
        return Err(Error::ParameterCount { expected: ideal.nparams(), found: noisy.nparams() });
    }
    if vartheta.len() != noisy.nparams() || theta.len() != ideal.nparams() {
        return Err(Error::ParameterCount { expected: ideal.nparams(), found: vartheta.len().min(theta.len()) });
    }
    let d = 1usize << ideal.nqubits();
    let pairs: Vec<(f64, f64)> = noisy
        .gates()
        .par_iter()
        .zip(ideal.gates())
        .zip(vartheta.par_iter().zip(theta))
        .map(|((e, u), (&a, &b))| {
            let je = choi_of(&e.at(a))?;
            let ju = choi_of(&u.at(b))?;
            let bounds = choi_distance_bounds(&je, &ju, d)?;
            Ok((bounds.upper, bounds.lower))
        })
        .collect::<Result<_>>()?;
    let norm = h.op_norm_inf()?;
    let (per_gate, per_gate_lower): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let worst = per_gate.iter().copied().fold(0.0, f64::max);
    Ok(PeelingBound {
        sum_form: norm * per_gate.iter().sum::<f64>(),
        max_form: norm * per_gate.len() as f64 * worst,
        per_gate,
        per_gate_lower,
    })
}

/// `2‖H‖ √(1 − ⟨ψ|ρ|ψ⟩)`.
pub fn fidelity_upper(psi: &PureState, rho: &DensityMatrix, h: &PauliSum) -> Result<f64> {
    let f = rho.fidelity_pure(psi)?;
    Ok(2.0 * h.op_norm_inf()? * (1.0 - f).max(0.0).sqrt())
}

/// Per-probe second-moment statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeStats {
    /// `Σ_j E[g_j²]`.
    pub second_moment: f64,
    /// `max_j QFI_j`.
    pub max_qfi: f64,
}

/// Root of the largest total second moment over the probe set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Estimate {
    pub value: f64,
    /// True when the moments were sampled rather than enumerated.
    pub sampled: bool,
}

fn sampled_second_moments(pt: &StatePoint, kind: EstimatorKind, policy: BaselinePolicy, seed: u64) -> Result<Vec<f64>> {
    let shots = FALLBACK_SHOTS;
    match kind {
        EstimatorKind::Sld => pt
            .slds()?
            .iter()
            .enumerate()
            .map(|(j, sld)| {
                let lambda = match policy {
                    BaselinePolicy::Zero => 0.0,
                    BaselinePolicy::Fixed(v) => v,
                    BaselinePolicy::Optimal => {
                        crate::estimators::optimal_baseline(&pt.rho, &pt.h, sld).unwrap_or(0.0)
                    }
                };
                let (values, probs): (Vec<f64>, Vec<f64>) = pt.sld_outcomes(sld, lambda)?.into_iter().unzip();
                let draws = BornDistribution::new(probs, values)?.sample(shots, rng::derive(seed, j as u64));
                Ok(draws.iter().map(|o| o.energy * o.energy).sum::<f64>() / shots as f64)
            })
            .collect(),
        EstimatorKind::Ld => {
            let outcomes = pt.ld_outcomes()?;
            let (probs, energies): (Vec<f64>, Vec<f64>) = outcomes.iter().map(|(p, e, _)| (*p, *e)).unzip();
            let mut acc = vec![0.0; pt.nparams()];
            for draw in BornDistribution::new(probs, energies)?.sample(shots, seed) {
                let (p, e, dp) = &outcomes[draw.label];
                for (a, d) in acc.iter_mut().zip(dp) {
                    *a += (e * d / p).powi(2);
                }
            }
            Ok(acc.into_iter().map(|a| a / shots as f64).collect())
        }
        EstimatorKind::Hadamard => unreachable!("Hadamard moments are always exact"),
    }
}

/// Second moments and QFI at every probe.
pub fn probe_stats(
    circuit: &ParametricCircuit,
    probes: &[Vec<f64>],
    h: &PauliSum,
    kind: EstimatorKind,
    policy: BaselinePolicy,
    seed: u64,
) -> Result<(Vec<ProbeStats>, bool)> {
    let (mut stats, sampled) = probe_stats_multi(circuit, probes, h, &[kind], policy, seed)?;
    Ok((stats.pop().expect("one estimator"), sampled))
}

/// [`probe_stats`] for several estimators, sharing the state at each probe.
/// Returns one list per entry of `kinds`.
pub fn probe_stats_multi(
    circuit: &ParametricCircuit,
    probes: &[Vec<f64>],
    h: &PauliSum,
    kinds: &[EstimatorKind],
    policy: BaselinePolicy,
    seed: u64,
) -> Result<(Vec<Vec<ProbeStats>>, bool)> {
    if probes.is_empty() {
        return Err(Error::param("probe set is empty"));
    }
    let sampled = circuit.nqubits() > ENUMERATION_QUBIT_CAP && kinds.iter().any(|&k| k != EstimatorKind::Hadamard);
    let per_probe = probes
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let pt = StatePoint::new(circuit, theta, h)?;
            let max_qfi = pt.qfi()?.into_iter().fold(0.0, f64::max);
            kinds
                .iter()
                .map(|&kind| {
                    let moments = match kind {
                        EstimatorKind::Hadamard => hadamard_second_moments(circuit, theta, h)?,
                        _ if sampled => sampled_second_moments(&pt, kind, policy, rng::derive(seed, i as u64))?,
                        EstimatorKind::Sld => pt.sld_second_moments(policy)?,
                        EstimatorKind::Ld => pt.ld_second_moments()?,
                    };
                    Ok(ProbeStats { second_moment: moments.iter().sum(), max_qfi })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = (0..kinds.len()).map(|k| per_probe.iter().map(|row| row[k]).collect()).collect();
    Ok((stats, sampled))
}

/// `max_θ √E[‖g(θ)‖²]` over the probe set.
pub fn g2_empirical(
    circuit: &ParametricCircuit,
    probes: &[Vec<f64>],
    h: &PauliSum,
    kind: EstimatorKind,
    policy: BaselinePolicy,
    seed: u64,
) -> Result<G2Estimate> {
    let (stats, sampled) = probe_stats(circuit, probes, h, kind, policy, seed)?;
    let worst = stats.iter().map(|s| s.second_moment).fold(0.0, f64::max);
    Ok(G2Estimate { value: worst.sqrt(), sampled })
}

/// `√P ‖H‖ max_{θ, j} √QFI_j(θ)` from precomputed QFI maxima.
pub fn qfi_bound_from_stats(nparams: usize, h_norm: f64, stats: &[ProbeStats]) -> f64 {
    let max_qfi = stats.iter().map(|s| s.max_qfi).fold(0.0, f64::max);
    (nparams as f64).sqrt() * h_norm * max_qfi.sqrt()
}

/// `√P ‖H‖ max_{θ, j} √QFI_j(θ)` over the probe set.
pub fn g2_qfi_upper(circuit: &ParametricCircuit, probes: &[Vec<f64>], h: &PauliSum) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::param("probe set is empty"));
    }
    let max_qfi = probes
        .par_iter()
        .map(|theta| {
            let q = crate::estimators::qfi_vector(circuit, theta)?;
            Ok(q.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((circuit.nparams() as f64).sqrt() * h.op_norm_inf()? * max_qfi.sqrt())
}

/// `Err + R·G/√I`.
pub fn assembled_bound(err: f64, g: f64, r: f64, iterations: usize) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::param("iteration count must be at least 1"));
    }
    if !(r > 0.0) {
        return Err(Error::param(format!("radius {r} must be positive")));
    }
    Ok(err + r * g / (iterations as f64).sqrt())
}

/// Iteration count at which `R·G/√I` equals `Err`; `None` when `Err ≤ 0`.
pub fn crossover(err: f64, g: f64, r: f64) -> Option<f64> {
    (err > 0.0).then(|| (r * g / err).powi(2))
}

/// Default parameter-space radius `π√P`.
pub fn default_radius(nparams: usize) -> f64 {
    std::f64::consts::PI * (nparams as f64).sqrt()
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103,
    107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// `count` points of a randomly shifted Halton sequence in `[0, 2π)^dim`.
pub fn halton_probes(count: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(Error::param(format!("Halton probes support at most {} dimensions", PRIMES.len())));
    }
    let mut r = rng::rng(seed);
    let shift: Vec<f64> = (0..dim).map(|_| r.random::<f64>()).collect();
    Ok((1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract() * std::f64::consts::TAU)
                .collect()
        })
        .collect())
}

/// Every quantity entering the assembled bound for one noise setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub err: f64,
    pub err_peeling_upper: f64,
    pub err_peeling_max_form: f64,
    pub err_fidelity_upper: f64,
    pub g2_empirical: f64,
    pub g2_sampled: bool,
    pub g2_qfi_upper: f64,
    pub radius: f64,
    pub estimator: EstimatorKind,
    pub probe_set_size: usize,
    pub seed: u64,
}

impl BoundReport {
    /// `Err + R·G/√I` with `G` the QFI bound.
    pub fn assembled(&self, iterations: usize) -> Result<f64> {
        assembled_bound(self.err, self.g2_qfi_upper, self.radius, iterations)
    }

    pub fn crossover(&self) -> Option<f64> {
        crossover(self.err, self.g2_qfi_upper, self.radius)
    }

    /// Flat `key=value` record, one pair per line.
    pub fn to_record(&self) -> String {
        let fields: [(&str, String); 12] = [
            ("err", format!("{:.16e}", self.err)),
            ("err_negative", (self.err < 0.0).to_string()),
            ("err_peeling_upper", format!("{:.16e}", self.err_peeling_upper)),
            ("err_peeling_max_form", format!("{:.16e}", self.err_peeling_max_form)),
            ("err_fidelity_upper", format!("{:.16e}", self.err_fidelity_upper)),
            ("g2_empirical", format!("{:.16e}", self.g2_empirical)),
            ("g2_sampled", self.g2_sampled.to_string()),
            ("g2_qfi_upper", format!("{:.16e}", self.g2_qfi_upper)),
            ("radius", format!("{:.16e}", self.radius)),
            ("estimator", self.estimator.to_string()),
            ("probe_set_size", self.probe_set_size.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let mut out: String = fields.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        if let Some(i) = self.crossover() {
            out.push_str(&format!("crossover_iterations={i:.16e}\n"));
        }
        out
    }
}

/// Inputs for [`bound_report`].
pub struct ReportInputs<'a> {
    pub noisy: &'a ParametricCircuit,
    pub ideal: &'a ParametricCircuit,
    pub h: &'a PauliSum,
    pub theta_opt: &'a [f64],
    pub vartheta_opt: &'a [f64],
    pub probes: &'a [Vec<f64>],
    pub estimator: EstimatorKind,
    pub policy: BaselinePolicy,
    pub radius: f64,
    pub seed: u64,
}

/// Evaluates every bound. The peeling bound needs the Choi matrix of each
/// gate and is limited to registers of at most half the qubit cap.
pub fn bound_report(inp: &ReportInputs<'_>) -> Result<BoundReport> {
    let err_value = err(inp.noisy, inp.vartheta_opt, inp.ideal, inp.theta_opt, inp.h)?;
    let peeling = peeling_upper(inp.noisy, inp.vartheta_opt, inp.ideal, inp.theta_opt, inp.h)?;
    let psi = inp.ideal.evolve_pure(inp.theta_opt)?;
    let rho = inp.noisy.evolve(inp.vartheta_opt)?;
    let fid = fidelity_upper(&psi, &rho, inp.h)?;
    let (stats, sampled) = probe_stats(inp.noisy, inp.probes, inp.h, inp.estimator, inp.policy, inp.seed)?;
    let g2 = stats.iter().map(|s| s.second_moment).fold(0.0, f64::max).sqrt();
    let qfi_bound = qfi_bound_from_stats(inp.noisy.nparams(), inp.h.op_norm_inf()?, &stats);
    Ok(BoundReport {
        err: err_value,
        err_peeling_upper: peeling.sum_form,
        err_peeling_max_form: peeling.max_form,
        err_fidelity_upper: fid,
        g2_empirical: g2,
        g2_sampled: sampled,
        g2_qfi_upper: qfi_bound,
        radius: inp.radius,
        estimator: inp.estimator,
        probe_set_size: inp.probes.len(),
        seed: inp.seed,
    })
}
