//! Gradient estimators for `C(θ) = Tr[H ρ(θ)]`.
//!
//! Three single-shot estimators are available, all unbiased for `∂_j C`:
//!
//! * **SLD**: measure `ĝ_j = {L_j, H}/2 + λ_j L_j`, where `L_j` is the
//!   symmetric logarithmic derivative solving `∂_j ρ = (L_j ρ + ρ L_j)/2`.
//! * **LD**: measure `H` once and report `E_y ∂_j log p(y|θ)` for every `j`,
//!   with probabilities taken from the simulator.
//! * **Hadamard**: ancilla interferometry on the noiseless circuit, one
//!   binary outcome per pair of generator and observable terms.
//!
//! Sampling with `shots = 0` returns the exact expectation instead.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::ParametricCircuit;
use crate::linalg;
use crate::pauli::PauliSum;
use crate::state::{BornDistribution, DensityMatrix, PureState};
use crate::{rng, CMatrix, Error, Result, C64};

/// Pairs of eigenvalues whose sum is below this fraction of the largest
/// pair sum are treated as outside the support of `ρ`.
pub const SLD_RELATIVE_CUTOFF: f64 = 1e-12;

/// Outcomes less likely than this are skipped in exact LD moments and are an
/// error when sampled.
pub const LD_MIN_PROBABILITY: f64 = 1e-14;

/// Shots per cost estimate.
pub const DEFAULT_COST_SHOTS: usize = 200;

/// Baselines with a smaller QFI are undefined.
pub const QFI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Sld,
    Ld,
    Hadamard,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Sld => "sld",
            EstimatorKind::Ld => "ld",
            EstimatorKind::Hadamard => "hadamard",
        })
    }
}

/// How the SLD baseline `λ_j` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum BaselinePolicy {
    #[default]
    Zero,
    /// Variance-minimizing value. Falls back to 0 where the QFI vanishes.
    Optimal,
    Fixed(f64),
}

/// One stochastic gradient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    /// Circuit executions consumed.
    pub shots_used: usize,
}

/// Symmetric logarithmic derivative for one parameter.
#[derive(Debug, Clone)]
pub struct SldResult {
    pub l: CMatrix,
    /// Number of eigenvalue pairs `(m, n)` inside the support.
    pub support_dim: usize,
    pub qfi: f64,
}

/// Cached eigendecomposition of `ρ` for solving many SLD equations.
#[derive(Debug, Clone)]
pub struct SldSolver {
    eigvals: Vec<f64>,
    eigvecs: CMatrix,
    cutoff: f64,
}

impl SldSolver {
    pub fn new(rho: &DensityMatrix) -> Self {
        let (eigvals, eigvecs) = linalg::eigh(rho.matrix());
        let top = eigvals.last().copied().unwrap_or(0.0).max(0.0);
        SldSolver { eigvals, eigvecs, cutoff: SLD_RELATIVE_CUTOFF * 2.0 * top }
    }

    pub fn solve(&self, drho: &CMatrix) -> Result<SldResult> {
        let d = self.eigvals.len();
        if drho.nrows() != d || drho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: drho.nrows() });
        }
        let herm = linalg::hermiticity_defect(drho);
        if herm > 1e-8 {
            return Err(Error::InvalidDerivative(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = linalg::trace(drho).norm();
        if tr > 1e-8 {
            return Err(Error::InvalidDerivative(format!("trace {tr:e} is not zero")));
        }
        let v = &self.eigvecs;
        let rotated = v.adjoint() * drho * v;
        let mut l_eig = CMatrix::zeros(d, d);
        let mut qfi = 0.0;
        let mut support_dim = 0;
        for m in 0..d {
            for n in 0..d {
                let s = self.eigvals[m] + self.eigvals[n];
                if s > self.cutoff {
                    let x = rotated[(m, n)];
                    l_eig[(m, n)] = x * (2.0 / s);
                    qfi += 2.0 * x.norm_sqr() / s;
                    support_dim += 1;
                }
            }
        }
        let mut l = v * l_eig * v.adjoint();
        linalg::hermitize(&mut l);
        Ok(SldResult { l, support_dim, qfi })
    }
}

/// Solves `∂ρ = (Lρ + ρL)/2` on the support of `ρ`.
pub fn solve_sld(rho: &DensityMatrix, drho: &CMatrix) -> Result<SldResult> {
    SldSolver::new(rho).solve(drho)
}

/// `ĝ = (LH + HL)/2 + λL`.
pub fn gradient_observable(h: &CMatrix, sld: &SldResult, lambda: f64) -> Result<CMatrix> {
    if h.nrows() != sld.l.nrows() {
        return Err(Error::DimensionMismatch { expected: sld.l.nrows(), found: h.nrows() });
    }
    let lh = &sld.l * h;
    let mut g = (&lh + lh.adjoint()) * C64::new(0.5, 0.0) + &sld.l * C64::new(lambda, 0.0);
    linalg::hermitize(&mut g);
    Ok(g)
}

/// `⟨{L, {H, L}}⟩`, the linear coefficient of the second moment in `λ`
/// (times two).
fn anticommutator_moment(rho: &DensityMatrix, h: &CMatrix, l: &CMatrix) -> f64 {
    let lh = l * h;
    let hl = h * l;
    let inner = &lh + &hl;
    let outer = l * &inner + &inner * l;
    linalg::trace_product(rho.matrix(), &outer).re
}

/// Baseline minimizing `E[ĝ²]`: `λ = −⟨{L,{H,L}}⟩ / (4 QFI)`.
pub fn optimal_baseline(rho: &DensityMatrix, h: &CMatrix, sld: &SldResult) -> Result<f64> {
    if sld.qfi <= QFI_FLOOR {
        return Err(Error::UndefinedBaseline(sld.qfi));
    }
    Ok(-anticommutator_moment(rho, h, &sld.l) / (4.0 * sld.qfi))
}

/// `ρ(θ)`, all `∂_j ρ`, and the observable at one parameter point.
#[derive(Debug, Clone)]
pub struct StatePoint {
    pub rho: DensityMatrix,
    pub derivs: Vec<CMatrix>,
    pub observable: PauliSum,
    pub h: CMatrix,
}

impl StatePoint {
    pub fn new(circuit: &ParametricCircuit, theta: &[f64], h: &PauliSum) -> Result<Self> {
        if h.nqubits() != circuit.nqubits() {
            return Err(Error::DimensionMismatch { expected: circuit.nqubits(), found: h.nqubits() });
        }
        let (rho, derivs) = circuit.evolve_with_derivatives(theta)?;
        Ok(StatePoint { rho, derivs, observable: h.clone(), h: h.realize()? })
    }

    pub fn nparams(&self) -> usize {
        self.derivs.len()
    }

    pub fn cost(&self) -> f64 {
        linalg::trace_product(&self.h, self.rho.matrix()).re
    }

    /// `∂_j C = Tr[H ∂_j ρ]`.
    pub fn gradient(&self) -> Vec<f64> {
        self.derivs.iter().map(|d| linalg::trace_product(&self.h, d).re).collect()
    }

    pub fn slds(&self) -> Result<Vec<SldResult>> {
        let solver = SldSolver::new(&self.rho);
        self.derivs.par_iter().map(|d| solver.solve(d)).collect()
    }

    pub fn qfi(&self) -> Result<Vec<f64>> {
        Ok(self.slds()?.into_iter().map(|s| s.qfi).collect())
    }

    fn baseline(&self, sld: &SldResult, policy: BaselinePolicy) -> f64 {
        match policy {
            BaselinePolicy::Zero => 0.0,
            BaselinePolicy::Fixed(v) => v,
            BaselinePolicy::Optimal => optimal_baseline(&self.rho, &self.h, sld).unwrap_or(0.0),
        }
    }

    /// Eigen-outcomes of `ĝ_j` as `(value, probability)` pairs.
    pub fn sld_outcomes(&self, sld: &SldResult, lambda: f64) -> Result<Vec<(f64, f64)>> {
        let g = gradient_observable(&self.h, sld, lambda)?;
        let (vals, vecs) = linalg::eigh(&g);
        Ok(vals
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let col = vecs.column(k);
                (v, (col.adjoint() * self.rho.matrix() * col)[(0, 0)].re)
            })
            .collect())
    }

    /// Outcomes of measuring `H` with `(probability, energy, ∂_j p for all j)`.
    pub fn ld_outcomes(&self) -> Result<Vec<(f64, f64, Vec<f64>)>> {
        if let Some(diag) = self.observable.diagonal() {
            Ok((0..diag.len())
                .map(|y| {
                    let dp = self.derivs.iter().map(|d| d[(y, y)].re).collect();
                    (self.rho.matrix()[(y, y)].re, diag[y], dp)
                })
                .collect())
        } else {
            let (vals, vecs) = linalg::eigh(&self.h);
            Ok(vals
                .iter()
                .enumerate()
                .map(|(k, &e)| {
                    let col = vecs.column(k);
                    let quad = |m: &CMatrix| (col.adjoint() * m * col)[(0, 0)].re;
                    (quad(self.rho.matrix()), e, self.derivs.iter().map(quad).collect())
                })
                .collect())
        }
    }

    /// Exact single-shot `E[g_j²]` for the SLD estimator.
    pub fn sld_second_moments(&self, policy: BaselinePolicy) -> Result<Vec<f64>> {
        self.slds()?
            .par_iter()
            .map(|sld| {
                let g = gradient_observable(&self.h, sld, self.baseline(sld, policy))?;
                Ok(linalg::trace_product(self.rho.matrix(), &(&g * &g)).re)
            })
            .collect()
    }

    /// Exact single-shot `E[g_j²] = Σ_y E_y² (∂_j p_y)² / p_y`.
    pub fn ld_second_moments(&self) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.nparams()];
        for (p, e, dp) in self.ld_outcomes()? {
            if p < LD_MIN_PROBABILITY {
                continue;
            }
            for (a, d) in acc.iter_mut().zip(&dp) {
                *a += e * e * d * d / p;
            }
        }
        Ok(acc)
    }

    pub fn sample_sld(&self, shots: usize, policy: BaselinePolicy, seed: u64) -> Result<GradientSample> {
        let slds = self.slds()?;
        let values = slds
            .par_iter()
            .enumerate()
            .map(|(j, sld)| {
                let lambda = self.baseline(sld, policy);
                if shots == 0 {
                    let g = gradient_observable(&self.h, sld, lambda)?;
                    return Ok(linalg::trace_product(self.rho.matrix(), &g).re);
                }
                let (values, probs): (Vec<f64>, Vec<f64>) = self.sld_outcomes(sld, lambda)?.into_iter().unzip();
                let dist = BornDistribution::new(probs, values)?;
                let draws = dist.sample(shots, rng::derive(seed, j as u64));
                Ok(draws.iter().map(|o| o.energy).sum::<f64>() / shots as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(GradientSample { values, kind: EstimatorKind::Sld, shots_used: shots.max(1) * self.nparams() })
    }

    pub fn sample_ld(&self, shots: usize, seed: u64) -> Result<GradientSample> {
        let outcomes = self.ld_outcomes()?;
        let p = self.nparams();
        if shots == 0 {
            return Ok(GradientSample { values: self.gradient(), kind: EstimatorKind::Ld, shots_used: 1 });
        }
        let (probs, energies): (Vec<f64>, Vec<f64>) = outcomes.iter().map(|(p, e, _)| (*p, *e)).unzip();
        let dist = BornDistribution::new(probs, energies)?;
        let mut values = vec![0.0; p];
        for draw in dist.sample(shots, seed) {
            let (py, e, dp) = &outcomes[draw.label];
            if *py < LD_MIN_PROBABILITY {
                return Err(Error::NumericalSupport(*py));
            }
            for (v, d) in values.iter_mut().zip(dp) {
                *v += e * d / py;
            }
        }
        values.iter_mut().for_each(|v| *v /= shots as f64);
        Ok(GradientSample { values, kind: EstimatorKind::Ld, shots_used: shots })
    }
}

/// Per-parameter quantum Fisher information.
pub fn qfi_vector(circuit: &ParametricCircuit, theta: &[f64]) -> Result<Vec<f64>> {
    let (rho, derivs) = circuit.evolve_with_derivatives(theta)?;
    let solver = SldSolver::new(&rho);
    derivs.par_iter().map(|d| solver.solve(d).map(|s| s.qfi)).collect()
}

pub fn sample_sld_gradient(
    circuit: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
    shots: usize,
    policy: BaselinePolicy,
    seed: u64,
) -> Result<GradientSample> {
    StatePoint::new(circuit, theta, h)?.sample_sld(shots, policy, seed)
}

pub fn sample_ld_gradient(
    circuit: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
    shots: usize,
    seed: u64,
) -> Result<GradientSample> {
    StatePoint::new(circuit, theta, h)?.sample_ld(shots, seed)
}

/// One interferometric term of the Hadamard-test gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HadamardTerm {
    pub param: usize,
    /// `2 β_μ α_ν`.
    pub weight: f64,
    /// Probability of reading the ancilla in `|0⟩`, `(1 + Im⟨ψ|φ⟩)/2`.
    pub p0: f64,
}

/// Every `(k, μ, ν)` term of the Hadamard-test gradient of a noiseless
/// circuit, with its exact ancilla probability.
///
/// For gate `k` with generator `Σ_μ β_μ Q_μ` and `H = Σ_ν α_ν P_ν`, the
/// register is prepared in `ψ = W A ψ₀` on the ancilla-0 branch and in
/// `φ = P_ν W Q_μ A ψ₀` on the ancilla-1 branch (`A` = gates up to `k`,
/// `W` = the rest). A final `R_x(π/2)` on the ancilla maps `Im⟨ψ|φ⟩` onto
/// its `|0⟩` probability and `∂_k C = Σ_{μν} 2 β_μ α_ν Im⟨ψ|φ⟩`.
pub fn hadamard_terms(circuit: &ParametricCircuit, theta: &[f64], h: &PauliSum) -> Result<Vec<HadamardTerm>> {
    if !circuit.is_noiseless() {
        return Err(Error::UnsupportedEstimator("the Hadamard test needs a noiseless circuit".into()));
    }
    if h.nqubits() != circuit.nqubits() {
        return Err(Error::DimensionMismatch { expected: circuit.nqubits(), found: h.nqubits() });
    }
    let p = circuit.nparams();
    let psi = circuit.evolve_pure(theta)?;
    let mut prefix = circuit.initial_state().clone();
    let mut terms = Vec::new();
    for k in 0..p {
        prefix = circuit.evolve_pure_range(prefix, theta, k..k + 1)?;
        for (beta, q) in circuit.gates()[k].generator().terms() {
            let kicked = PureState::from_amplitudes_unchecked(q.action().apply_vector(prefix.amplitudes()));
            let w_branch = circuit.evolve_pure_range(kicked, theta, k + 1..p)?;
            for (alpha, pn) in h.terms() {
                let phi = PureState::from_amplitudes_unchecked(pn.action().apply_vector(w_branch.amplitudes()));
                let p0 = ancilla_zero_probability(&psi, &phi);
                terms.push(HadamardTerm { param: k, weight: 2.0 * beta * alpha, p0 });
            }
        }
    }
    Ok(terms)
}

/// Two-branch simulation of `(|0⟩|ψ⟩ + |1⟩|φ⟩)/√2` followed by
/// `R_x(π/2) = (I − iX)/√2` on the ancilla.
fn ancilla_zero_probability(psi: &PureState, phi: &PureState) -> f64 {
    let s = 0.5;
    let minus_i = C64::new(0.0, -1.0);
    psi.amplitudes()
        .iter()
        .zip(phi.amplitudes())
        .map(|(a, b)| ((a + minus_i * b) * s).norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Hadamard-test gradient; each term is measured `shots` times (exact when 0).
pub fn hadamard_test_gradient(
    circuit: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
    shots: usize,
    seed: u64,
) -> Result<GradientSample> {
    let terms = hadamard_terms(circuit, theta, h)?;
    let mut values = vec![0.0; circuit.nparams()];
    for (i, t) in terms.iter().enumerate() {
        let m = if shots == 0 {
            2.0 * t.p0 - 1.0
        } else {
            let binom = Binomial::new(shots as u64, t.p0).map_err(|e| Error::param(e.to_string()))?;
            let zeros = binom.sample(&mut rng::rng(rng::derive(seed, i as u64))) as f64;
            2.0 * zeros / shots as f64 - 1.0
        };
        values[t.param] += t.weight * m;
    }
    Ok(GradientSample { values, kind: EstimatorKind::Hadamard, shots_used: shots.max(1) * terms.len() })
}

/// Exact single-shot `E[g_j²]` of the Hadamard estimator (one shot per term).
pub fn hadamard_second_moments(circuit: &ParametricCircuit, theta: &[f64], h: &PauliSum) -> Result<Vec<f64>> {
    let terms = hadamard_terms(circuit, theta, h)?;
    let p = circuit.nparams();
    let mut mean = vec![0.0; p];
    let mut var = vec![0.0; p];
    for t in &terms {
        let m = 2.0 * t.p0 - 1.0;
        mean[t.param] += t.weight * m;
        var[t.param] += t.weight * t.weight * (1.0 - m * m);
    }
    Ok(mean.iter().zip(&var).map(|(m, v)| v + m * m).collect())
}

/// Draws one gradient estimate of the requested kind.
pub fn sample_gradient(
    kind: EstimatorKind,
    circuit: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
    shots: usize,
    policy: BaselinePolicy,
    seed: u64,
) -> Result<GradientSample> {
    match kind {
        EstimatorKind::Sld => sample_sld_gradient(circuit, theta, h, shots, policy, seed),
        EstimatorKind::Ld => sample_ld_gradient(circuit, theta, h, shots, seed),
        EstimatorKind::Hadamard => hadamard_test_gradient(circuit, theta, h, shots, seed),
    }
}

/// Exact single-shot second moments `E[g_j²]` of the requested estimator.
pub fn exact_second_moments(
    kind: EstimatorKind,
    circuit: &ParametricCircuit,
    theta: &[f64],
    h: &PauliSum,
    policy: BaselinePolicy,
) -> Result<Vec<f64>> {
    match kind {
        EstimatorKind::Sld => StatePoint::new(circuit, theta, h)?.sld_second_moments(policy),
        EstimatorKind::Ld => StatePoint::new(circuit, theta, h)?.ld_second_moments(),
        EstimatorKind::Hadamard => hadamard_second_moments(circuit, theta, h),
    }
}

/// Mean of `shots` Born samples of `H` under `ρ(θ)`.
pub fn sample_cost(circuit: &ParametricCircuit, theta: &[f64], h: &PauliSum, shots: usize, seed: u64) -> Result<f64> {
    let draws = circuit.evolve(theta)?.sample_outcomes(h, shots, seed)?;
    Ok(draws.iter().map(|o| o.energy).sum::<f64>() / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_qaoa, GateNoise, NoisyGate, QaoaSpec};
    use crate::linalg::max_abs;
    use crate::pauli::PauliString;
    use crate::state::{plus_state, PureState};
    use proptest::prelude::*;

    fn residual(rho: &DensityMatrix, drho: &CMatrix, l: &CMatrix) -> f64 {
        let lhs = (l * rho.matrix() + rho.matrix() * l) * C64::new(0.5, 0.0);
        linalg::frobenius(&(lhs - drho))
    }

    fn real_diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
    }

    fn x_rotation_circuit() -> ParametricCircuit {
        let g = NoisyGate::new(PauliSum::single(1.0, "X".parse().unwrap()), GateNoise::None).unwrap();
        ParametricCircuit::new(vec![g], PureState::basis(1, 0).unwrap()).unwrap()
    }

    #[test]
    fn pure_state_sld() {
        let c = x_rotation_circuit();
        let (rho, d) = c.evolve_with_derivatives(&[0.4]).unwrap();
        let sld = solve_sld(&rho, &d[0]).unwrap();
        assert!(residual(&rho, &d[0], &sld.l) < 1e-9);
        assert!(max_abs(&(sld.l.clone() - &d[0] * C64::new(2.0, 0.0))) < 1e-9);
    }

    #[test]
    fn zero_derivative_sld() {
        let rho = plus_state(2).unwrap().to_density();
        let sld = solve_sld(&rho, &CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(sld.qfi, 0.0);
        assert_eq!(max_abs(&sld.l), 0.0);
    }

    #[test]
    fn classical_fisher_information() {
        let (p, q) = (0.3, 0.07);
        let rho = DensityMatrix::from_matrix(real_diag(&[p, 1.0 - p])).unwrap();
        let sld = solve_sld(&rho, &real_diag(&[q, -q])).unwrap();
        assert!(max_abs(&(sld.l - real_diag(&[q / p, -q / (1.0 - p)]))) < 1e-14);
        assert!((sld.qfi - (q * q / p + q * q / (1.0 - p))).abs() < 1e-14);
    }

    #[test]
    fn sld_rejects_invalid_derivatives() {
        let rho = plus_state(1).unwrap().to_density();
        assert!(matches!(solve_sld(&rho, &real_diag(&[1.0, 0.0])), Err(Error::InvalidDerivative(_))));
        let skew = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(solve_sld(&rho, &skew), Err(Error::InvalidDerivative(_))));
    }

    #[test]
    fn qfi_examples() {
        assert!((qfi_vector(&x_rotation_circuit(), &[0.0]).unwrap()[0] - 4.0).abs() < 1e-12);
        assert!((qfi_vector(&x_rotation_circuit(), &[1.1]).unwrap()[0] - 4.0).abs() < 1e-9);
        let spec = QaoaSpec::ring(3, 2).unwrap();
        let theta = [0.3, 0.5, -0.2, 0.9];
        let a = qfi_vector(&build_qaoa(&spec, &GateNoise::None).unwrap(), &theta).unwrap();
        let b = qfi_vector(&build_qaoa(&spec, &GateNoise::ZDephasing { eta: 0.0 }).unwrap(), &theta).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn maximally_mixed_state_has_no_qfi() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(solve_sld(&rho, &CMatrix::zeros(4, 4)).unwrap().qfi, 0.0);
    }

    #[test]
    fn pure_state_qfi_formula() {
        let spec = QaoaSpec::ring(3, 2).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        let theta = [0.3, 0.5, -0.2, 0.9];
        let qfi = qfi_vector(&c, &theta).unwrap();
        let h = 1e-6;
        let psi = c.evolve_pure(&theta).unwrap();
        for j in 0..4 {
            let mut tp = theta;
            tp[j] += h;
            let mut tm = theta;
            tm[j] -= h;
            let (a, b) = (c.evolve_pure(&tp).unwrap(), c.evolve_pure(&tm).unwrap());
            let dpsi: Vec<C64> = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y) / (2.0 * h)).collect();
            let norm: f64 = dpsi.iter().map(|z| z.norm_sqr()).sum();
            let overlap: C64 = psi.amplitudes().iter().zip(&dpsi).map(|(x, y)| x.conj() * y).sum();
            let oracle = 4.0 * (norm - overlap.norm_sqr());
            assert!((qfi[j] - oracle).abs() < 1e-6, "{j}: {} vs {oracle}", qfi[j]);
        }
    }

    fn noisy_point(eta: f64, theta: &[f64]) -> StatePoint {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta }).unwrap();
        StatePoint::new(&c, theta, &spec.cost).unwrap()
    }

    #[test]
    fn gradient_observable_mean_is_lambda_independent() {
        let pt = noisy_point(0.1, &[0.4, 0.7]);
        let grad = pt.gradient();
        for (j, sld) in pt.slds().unwrap().iter().enumerate() {
            for lambda in [-1.0, 0.0, 1.0] {
                let g = gradient_observable(&pt.h, sld, lambda).unwrap();
                assert!((linalg::trace_product(pt.rho.matrix(), &g).re - grad[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_observable_has_zero_gradient() {
        let pt = noisy_point(0.1, &[0.4, 0.7]);
        let id = CMatrix::identity(8, 8);
        for sld in pt.slds().unwrap() {
            let g = gradient_observable(&id, &sld, 0.5).unwrap();
            assert!(linalg::trace_product(pt.rho.matrix(), &g).norm() < 1e-9);
        }
    }

    #[test]
    fn second_moment_is_a_parabola_in_lambda() {
        let pt = noisy_point(0.2, &[0.9, -0.4]);
        for sld in pt.slds().unwrap() {
            let m = |lambda: f64| {
                let g = gradient_observable(&pt.h, &sld, lambda).unwrap();
                linalg::trace_product(pt.rho.matrix(), &(&g * &g)).re
            };
            let curvature = (m(1.0) + m(-1.0) - 2.0 * m(0.0)) / 2.0;
            assert!((curvature - sld.qfi).abs() < 1e-8);
            let opt = optimal_baseline(&pt.rho, &pt.h, &sld).unwrap();
            for k in -20..=20 {
                let lambda = k as f64 / 10.0;
                assert!(m(opt) <= m(lambda) + 1e-12);
                assert!((m(lambda) - m(opt) - sld.qfi * (lambda - opt).powi(2)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn baseline_vanishes_for_symmetric_instance() {
        // ρ = diag(p, 1−p) and H = X: {L, {X, L}} has zero diagonal.
        let rho = DensityMatrix::from_matrix(real_diag(&[0.3, 0.7])).unwrap();
        let sld = solve_sld(&rho, &real_diag(&[0.1, -0.1])).unwrap();
        let x = "X".parse::<PauliString>().unwrap().realize();
        assert_eq!(optimal_baseline(&rho, &x, &sld).unwrap(), 0.0);
        let flat = solve_sld(&rho, &CMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(optimal_baseline(&rho, &x, &flat), Err(Error::UndefinedBaseline(_))));
    }

    #[test]
    fn estimators_are_unbiased_by_enumeration() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        for eta in [0.0, 0.15] {
            let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta }).unwrap();
            let pt = StatePoint::new(&c, &[0.6, -0.35], &spec.cost).unwrap();
            let grad = pt.gradient();
            for (j, sld) in pt.slds().unwrap().iter().enumerate() {
                for lambda in [0.0, 0.7] {
                    let mean: f64 = pt.sld_outcomes(sld, lambda).unwrap().iter().map(|(v, p)| v * p).sum();
                    assert!((mean - grad[j]).abs() < 1e-9);
                }
            }
            let mut ld = vec![0.0; 2];
            for (p, e, dp) in pt.ld_outcomes().unwrap() {
                if p >= LD_MIN_PROBABILITY {
                    for j in 0..2 {
                        ld[j] += e * dp[j];
                    }
                }
            }
            for j in 0..2 {
                assert!((ld[j] - grad[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_mode_returns_gradient() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta: 0.1 }).unwrap();
        let theta = [0.6, -0.35];
        let grad = c.gradient(&theta, &spec.cost).unwrap();
        for policy in [BaselinePolicy::Zero, BaselinePolicy::Optimal, BaselinePolicy::Fixed(0.3)] {
            let s = sample_sld_gradient(&c, &theta, &spec.cost, 0, policy, 1).unwrap();
            for j in 0..2 {
                assert!((s.values[j] - grad[j]).abs() < 1e-9);
            }
        }
        let s = sample_ld_gradient(&c, &theta, &spec.cost, 0, 1).unwrap();
        assert!((s.values[0] - grad[0]).abs() < 1e-12);
    }

    #[test]
    fn sampled_sld_mean_is_within_five_standard_errors() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta: 0.1 }).unwrap();
        let theta = [0.6, -0.35];
        let pt = StatePoint::new(&c, &theta, &spec.cost).unwrap();
        let grad = pt.gradient();
        let m2 = pt.sld_second_moments(BaselinePolicy::Zero).unwrap();
        let shots = 100_000;
        let s = pt.sample_sld(shots, BaselinePolicy::Zero, 42).unwrap();
        assert_eq!(s.shots_used, 2 * shots);
        for j in 0..2 {
            let se = ((m2[j] - grad[j] * grad[j]) / shots as f64).sqrt();
            assert!((s.values[j] - grad[j]).abs() < 5.0 * se, "{j}");
        }
        let again = pt.sample_sld(shots, BaselinePolicy::Zero, 42).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn ld_with_identity_observable_averages_to_zero() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta: 0.1 }).unwrap();
        let id = PauliSum::single(1.0, PauliString::identity(3));
        let pt = StatePoint::new(&c, &[0.3, 0.2], &id).unwrap();
        let mut total = [0.0; 2];
        for (p, e, dp) in pt.ld_outcomes().unwrap() {
            assert_eq!(e, 1.0);
            if p >= LD_MIN_PROBABILITY {
                total[0] += dp[0];
                total[1] += dp[1];
            }
        }
        assert!(total[0].abs() < 1e-12 && total[1].abs() < 1e-12);
    }

    #[test]
    fn ld_parameter_without_effect_gives_zero() {
        // At γ₁ = 0 the register stays in a mixer eigenstate, so β₁ only
        // changes a global phase.
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        let pt = StatePoint::new(&c, &[0.0, 0.4], &spec.cost).unwrap();
        for (_, _, dp) in pt.ld_outcomes().unwrap() {
            assert_eq!(dp[1], 0.0);
        }
        let s = pt.sample_ld(500, 3).unwrap();
        assert_eq!(s.values[1], 0.0);
        assert_eq!(s.shots_used, 500);
    }

    #[test]
    fn hadamard_exact_mode_matches_exact_gradient() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        for theta in [[0.37, -0.81], [1.2, 0.4], [0.0, 0.0]] {
            let exact = c.gradient(&theta, &spec.cost).unwrap();
            let est = hadamard_test_gradient(&c, &theta, &spec.cost, 0, 0).unwrap();
            for j in 0..2 {
                assert!((exact[j] - est.values[j]).abs() < 1e-9, "{theta:?}");
            }
        }
    }

    #[test]
    fn hadamard_unbiased_coin_and_noise_rejection() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        for t in hadamard_terms(&c, &[0.0, 0.0], &spec.cost).unwrap() {
            assert!((t.p0 - 0.5).abs() < 1e-12);
        }
        let noisy = build_qaoa(&spec, &GateNoise::ZDephasing { eta: 0.1 }).unwrap();
        assert!(matches!(hadamard_test_gradient(&noisy, &[0.1, 0.1], &spec.cost, 0, 0), Err(Error::UnsupportedEstimator(_))));
    }

    #[test]
    fn hadamard_second_moment_matches_sampling() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        let theta = [0.37, -0.81];
        let m2 = hadamard_second_moments(&c, &theta, &spec.cost).unwrap();
        let exact = c.gradient(&theta, &spec.cost).unwrap();
        let reps = 4000;
        let mut acc = [0.0; 2];
        for r in 0..reps {
            let s = hadamard_test_gradient(&c, &theta, &spec.cost, 1, r).unwrap();
            acc[0] += s.values[0].powi(2);
            acc[1] += s.values[1].powi(2);
        }
        for j in 0..2 {
            let emp = acc[j] / reps as f64;
            assert!((emp - m2[j]).abs() < 0.1 * m2[j], "{emp} vs {}", m2[j]);
            assert!(m2[j] >= exact[j] * exact[j]);
        }
    }

    #[test]
    fn sample_cost_statistics() {
        let spec = QaoaSpec::ring(3, 1).unwrap();
        let c = build_qaoa(&spec, &GateNoise::None).unwrap();
        // A computational basis state is an eigenstate of the ring.
        let g = NoisyGate::new(PauliSum::single(1.0, "ZII".parse().unwrap()), GateNoise::None).unwrap();
        let basis = ParametricCircuit::new(vec![g], PureState::basis(3, 0b011).unwrap()).unwrap();
        let e = sample_cost(&basis, &[0.3], &spec.cost, DEFAULT_COST_SHOTS, 9).unwrap();
        assert_eq!(e, -1.0);
        // Enumerated mean of the single-shot estimate equals the exact cost.
        let theta = [0.5, 0.2];
        let dist = c.evolve(&theta).unwrap().born_distribution(&spec.cost).unwrap();
        assert!((dist.mean() - c.cost(&theta, &spec.cost).unwrap()).abs() < 1e-12);
        assert_eq!(DEFAULT_COST_SHOTS, 200);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sld_residual_on_noisy_states(t in proptest::collection::vec(-3.2f64..3.2, 4), eta in 0.0f64..0.4) {
            let spec = QaoaSpec::ring(3, 2).unwrap();
            let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta }).unwrap();
            let (rho, d) = c.evolve_with_derivatives(&t).unwrap();
            let solver = SldSolver::new(&rho);
            for dj in &d {
                let sld = solver.solve(dj).unwrap();
                prop_assert!(residual(&rho, dj, &sld.l) < 1e-9);
                prop_assert!(linalg::trace_product(rho.matrix(), &sld.l).norm() < 1e-9);
                prop_assert!(sld.qfi >= 0.0);
            }
        }

        #[test]
        fn ld_second_moment_below_qfi_bound(t in proptest::collection::vec(-3.2f64..3.2, 2), eta in 0.0f64..0.4) {
            let spec = QaoaSpec::ring(3, 1).unwrap();
            let c = build_qaoa(&spec, &GateNoise::ZDephasing { eta }).unwrap();
            let pt = StatePoint::new(&c, &t, &spec.cost).unwrap();
            let norm = spec.cost.op_norm_inf().unwrap();
            let qfi = pt.qfi().unwrap();
            for (m2, q) in pt.ld_second_moments().unwrap().iter().zip(&qfi) {
                prop_assert!(*m2 <= norm * norm * q + 1e-9);
            }
        }
    }
}
