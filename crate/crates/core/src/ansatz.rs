//! Parametric circuits `ρ(θ) = E_P^{θ_P} ∘ ⋯ ∘ E_1^{θ_1}[ρ₀]`, where every gate
//! is an ideal rotation `e^{-iθX}` followed by a fixed noise channel.
//!
//! Gates are compiled into elementary steps once, at construction. A generator
//! whose terms commute is split exactly into per-term Pauli rotations, which
//! act on the register in `O(d²)` without forming any matrix exponential.
//! Device noise is attached to each of those elementary rotations, so a cost
//! layer becomes one two-qubit gate per edge and a mixer layer one
//! single-qubit gate per qubit.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{self, KrausChannel};
use crate::linalg::{self, LocalLayout, LocalSuperop};
use crate::pauli::{Pauli, PauliAction, PauliString, PauliSum};
use crate::state::{plus_state, DensityMatrix, PureState};
use crate::{rng, CMatrix, Error, Result, C64, DEFAULT_QUBIT_CAP};

/// Largest trace/Hermiticity drift tolerated after a single gate.
pub const GATE_DRIFT_TOL: f64 = 1e-8;

/// Error rate and duration of one class of elementary gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateErrorModel {
    /// Depolarizing probability applied after the gate.
    pub error: f64,
    /// Gate duration, same unit as the relaxation times.
    pub time: f64,
}

/// Hardware-style noise: depolarizing then thermal relaxation after every
/// elementary gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceNoise {
    pub single_qubit: GateErrorModel,
    pub two_qubit: GateErrorModel,
    /// Per-qubit relaxation times.
    pub t1: Vec<f64>,
    /// Per-qubit dephasing times.
    pub t2: Vec<f64>,
}

/// Noise attached to each gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GateNoise {
    #[default]
    None,
    /// `(1−η)ρ + η ZρZ` on every qubit the gate touches.
    ZDephasing { eta: f64 },
    /// Gaussian jitter of the gate angle. Exact for single-string generators;
    /// other generators average `samples` seeded unitaries.
    GaussianFluctuation {
        sigma: f64,
        #[serde(default)]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    Device(DeviceNoise),
}

impl GateNoise {
    pub fn is_none(&self) -> bool {
        matches!(self, GateNoise::None)
    }
}

#[derive(Debug, Clone)]
enum Step {
    /// `e^{-iθwσ}`.
    Rotation { action: PauliAction, weight: f64 },
    /// `e^{-iθX}` for a generator with non-commuting terms, on its support.
    Unitary { layout: LocalLayout, generator: CMatrix, eigvals: Vec<f64>, eigvecs: CMatrix },
    Channel { channel: KrausChannel, layout: LocalLayout, superop: LocalSuperop, adjoint: LocalSuperop },
    /// `(1/S) Σ_s U(δ_s) · U(δ_s)†` over sampled angle offsets.
    Jitter { unitary: Vec<Step>, offsets: Vec<f64> },
}

impl Step {
    fn is_parametric(&self) -> bool {
        matches!(self, Step::Rotation { .. } | Step::Unitary { .. })
    }

    fn local_unitary(eigvals: &[f64], eigvecs: &CMatrix, angle: f64) -> CMatrix {
        let phases = nalgebra::DVector::from_iterator(
            eigvals.len(),
            eigvals.iter().map(|&l| C64::from_polar(1.0, -angle * l)),
        );
        eigvecs * CMatrix::from_diagonal(&phases) * eigvecs.adjoint()
    }

    /// Applies the step to any register operator; `theta` is the gate angle.
    fn apply(&self, m: &CMatrix, theta: f64) -> CMatrix {
        match self {
            Step::Rotation { action, weight } => action.rotate(m, theta * weight),
            Step::Unitary { layout, eigvals, eigvecs, .. } => {
                let u = Self::local_unitary(eigvals, eigvecs, theta);
                let mut out = m.clone();
                linalg::apply_left(&mut out, &u, layout);
                linalg::apply_right_adjoint(&mut out, &u, layout);
                out
            }
            Step::Channel { layout, superop, .. } => superop.apply(m, layout),
            Step::Jitter { unitary, offsets } => {
                let w = C64::new(1.0 / offsets.len() as f64, 0.0);
                let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
                for &delta in offsets {
                    let mut term = m.clone();
                    for s in unitary {
                        term = s.apply(&term, delta);
                    }
                    acc += term * w;
                }
                acc
            }
        }
    }

    /// Heisenberg-picture adjoint of [`Step::apply`].
    fn apply_adjoint(&self, b: &CMatrix, theta: f64) -> CMatrix {
        match self {
            Step::Rotation { .. } | Step::Unitary { .. } => self.apply(b, -theta),
            Step::Channel { layout, adjoint, .. } => adjoint.apply(b, layout),
            Step::Jitter { unitary, offsets } => {
                let w = C64::new(1.0 / offsets.len() as f64, 0.0);
                let mut acc = CMatrix::zeros(b.nrows(), b.ncols());
                for &delta in offsets {
                    let mut term = b.clone();
                    for s in unitary.iter().rev() {
                        term = s.apply(&term, -delta);
                    }
                    acc += term * w;
                }
                acc
            }
        }
    }

    /// `−i[G, m]` for the generator `G` of a parametric step (weight included).
    fn generator_commutator(&self, m: &CMatrix) -> CMatrix {
        let minus_i = C64::new(0.0, -1.0);
        match self {
            Step::Rotation { action, weight } => action.commutator(m) * (minus_i * *weight),
            Step::Unitary { layout, generator, .. } => {
                let mut left = m.clone();
                linalg::apply_left(&mut left, generator, layout);
                let mut right = m.clone();
                linalg::apply_right_adjoint(&mut right, generator, layout);
                (left - right) * minus_i
            }
            _ => CMatrix::zeros(m.nrows(), m.ncols()),
        }
    }

    /// `−iG ψ` for the generator of a parametric step.
    fn generator_vector(&self, psi: &[C64]) -> Vec<C64> {
        let minus_i = C64::new(0.0, -1.0);
        match self {
            Step::Rotation { action, weight } => {
                action.apply_vector(psi).into_iter().map(|a| a * minus_i * *weight).collect()
            }
            Step::Unitary { layout, generator, .. } => {
                let mut v = CMatrix::from_column_slice(psi.len(), 1, psi);
                linalg::apply_left(&mut v, generator, layout);
                v.as_slice().iter().map(|a| a * minus_i).collect()
            }
            _ => unreachable!("generator of a noisy step"),
        }
    }

    fn apply_pure(&self, psi: &mut [C64], theta: f64) {
        match self {
            Step::Rotation { action, weight } => action.rotate_vector(psi, theta * weight),
            Step::Unitary { layout, eigvals, eigvecs, .. } => {
                let u = Self::local_unitary(eigvals, eigvecs, theta);
                let mut v = CMatrix::from_column_slice(psi.len(), 1, psi);
                linalg::apply_left(&mut v, &u, layout);
                psi.copy_from_slice(v.as_slice());
            }
            _ => unreachable!("pure evolution of a noisy step"),
        }
    }
}

/// One parametric gate `E^θ = D ∘ U^θ` with `U^θ = e^{-iθX}`.
#[derive(Debug, Clone)]
pub struct NoisyGate {
    generator: PauliSum,
    noise: GateNoise,
    steps: Vec<Step>,
}

fn ideal_steps(generator: &PauliSum) -> Vec<Step> {
    if generator.terms_commute() {
        generator
            .terms()
            .iter()
            .map(|(w, s)| Step::Rotation { action: s.action(), weight: *w })
            .collect()
    } else {
        let support = generator.support();
        let local = channels::local_generator(generator, &support);
        let (eigvals, eigvecs) = linalg::eigh(&local);
        vec![Step::Unitary {
            layout: LocalLayout::new(&support, generator.nqubits()),
            generator: local,
            eigvals,
            eigvecs,
        }]
    }
}

fn channel_step(channel: KrausChannel, n: usize) -> Step {
    let layout = LocalLayout::new(channel.targets(), n);
    let superop = LocalSuperop::from_kraus(channel.kraus_ops());
    let adjoint = superop.adjoint();
    Step::Channel { channel, layout, superop, adjoint }
}

impl NoisyGate {
    /// Compiles `generator` with `noise`. `seed` only matters for sampled
    /// jitter noise.
    pub fn new(generator: PauliSum, noise: GateNoise) -> Result<Self> {
        Self::with_seed(generator, noise, 0)
    }

    pub(crate) fn with_seed(generator: PauliSum, noise: GateNoise, gate_seed: u64) -> Result<Self> {
        let n = generator.nqubits();
        if n == 0 || n > DEFAULT_QUBIT_CAP {
            return Err(Error::QubitCap { requested: n, cap: DEFAULT_QUBIT_CAP });
        }
        if generator.is_empty() {
            return Err(Error::param("gate generator has no terms"));
        }
        let support = generator.support();
        let mut steps = Vec::new();
        match &noise {
            GateNoise::None => steps = ideal_steps(&generator),
            GateNoise::ZDephasing { eta } => {
                steps = ideal_steps(&generator);
                for &q in &support {
                    steps.push(channel_step(channels::z_depolarizing(*eta, &[q])?, n));
                }
            }
            GateNoise::GaussianFluctuation { sigma, samples, seed } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::param(format!("fluctuation width {sigma} must be finite and nonnegative")));
                }
                steps = ideal_steps(&generator);
                if let [(w, s)] = generator.terms() {
                    let unit = PauliSum::single(1.0, s.clone());
                    steps.push(channel_step(channels::gaussian_fluctuation_channel(&unit, w.abs() * sigma)?, n));
                } else if *samples == 0 {
                    return Err(Error::IncompatibleNoise(
                        "Gaussian fluctuation on a multi-term generator needs Monte-Carlo samples".into(),
                    ));
                } else {
                    let normal = Normal::new(0.0, *sigma).map_err(|e| Error::param(e.to_string()))?;
                    let mut r = rng::rng(rng::derive(*seed, gate_seed));
                    let offsets = (0..*samples).map(|_| normal.sample(&mut r)).collect();
                    steps.push(Step::Jitter { unitary: ideal_steps(&generator), offsets });
                }
            }
            GateNoise::Device(dev) => {
                if dev.t1.len() < n || dev.t2.len() < n {
                    return Err(Error::param(format!("device noise lists relaxation times for fewer than {n} qubits")));
                }
                if !generator.terms_commute() {
                    return Err(Error::IncompatibleNoise("device noise needs a generator with commuting terms".into()));
                }
                for (w, s) in generator.terms() {
                    steps.push(Step::Rotation { action: s.action(), weight: *w });
                    let qubits = s.support();
                    let model = match qubits.len() {
                        0 => continue,
                        1 => dev.single_qubit,
                        2 => dev.two_qubit,
                        k => {
                            return Err(Error::IncompatibleNoise(format!(
                                "device noise has no {k}-qubit gate for term {s}"
                            )))
                        }
                    };
                    steps.push(channel_step(channels::depolarizing(model.error, &qubits)?, n));
                    for &q in &qubits {
                        steps.push(channel_step(channels::thermal_relaxation(dev.t1[q], dev.t2[q], model.time, q)?, n));
                    }
                }
            }
        }
        Ok(NoisyGate { generator, noise, steps })
    }

    pub fn generator(&self) -> &PauliSum {
        &self.generator
    }

    pub fn noise(&self) -> &GateNoise {
        &self.noise
    }

    pub fn nqubits(&self) -> usize {
        self.generator.nqubits()
    }

    /// The same gate without noise.
    pub fn ideal(&self) -> NoisyGate {
        NoisyGate { generator: self.generator.clone(), noise: GateNoise::None, steps: ideal_steps(&self.generator) }
    }

    /// Number of elementary rotations after decomposition.
    pub fn elementary_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_parametric()).count()
    }

    /// Human-readable decomposition, e.g. `ZZII; depol[0,1]; relax[0]; relax[1]`.
    pub fn decomposition(&self) -> String {
        let mut parts = Vec::new();
        let mut terms = self.generator.terms().iter();
        for step in &self.steps {
            parts.push(match step {
                Step::Rotation { .. } => terms.next().map(|(_, s)| s.to_string()).unwrap_or_default(),
                Step::Unitary { .. } => format!("exp[{}]", self.generator.terms().len()),
                Step::Channel { channel, .. } => format!("kraus{:?}x{}", channel.targets(), channel.kraus_ops().len()),
                Step::Jitter { offsets, .. } => format!("jitter[{}]", offsets.len()),
            });
            if matches!(step, Step::Unitary { .. }) {
                terms = [].iter();
            }
        }
        parts.join("; ")
    }

    /// Applies the gate to any register operator.
    pub fn apply_matrix(&self, m: &CMatrix, theta: f64) -> CMatrix {
        self.steps.iter().fold(m.clone(), |acc, s| s.apply(&acc, theta))
    }

    /// Heisenberg-picture adjoint of the gate.
    pub fn apply_adjoint_matrix(&self, b: &CMatrix, theta: f64) -> CMatrix {
        self.steps.iter().rev().fold(b.clone(), |acc, s| s.apply_adjoint(&acc, theta))
    }

    /// `e^{-iθX}|ψ⟩`. Only valid for noiseless gates.
    pub fn apply_pure(&self, psi: &mut [C64], theta: f64) -> Result<()> {
        if !self.noise.is_none() {
            return Err(Error::IncompatibleNoise("pure-state evolution of a noisy gate".into()));
        }
        for s in &self.steps {
            s.apply_pure(psi, theta);
        }
        Ok(())
    }

    /// The gate at a fixed angle as a linear map on register operators.
    pub fn at(&self, theta: f64) -> GateAt<'_> {
        GateAt { gate: self, theta }
    }
}

/// A gate bound to an angle, for Choi-matrix construction.
pub struct GateAt<'a> {
    gate: &'a NoisyGate,
    theta: f64,
}

impl channels::LinearMap for GateAt<'_> {
    fn nqubits(&self) -> usize {
        self.gate.nqubits()
    }

    fn map(&self, m: &CMatrix) -> CMatrix {
        self.gate.apply_matrix(m, self.theta)
    }
}

/// An ordered list of parametric gates acting on a fixed initial state.
#[derive(Debug, Clone)]
pub struct ParametricCircuit {
    nqubits: usize,
    gates: Vec<NoisyGate>,
    initial: PureState,
}

fn forward_density(nqubits: usize, m: CMatrix) -> DensityMatrix {
    debug_assert_eq!(m.nrows(), 1 << nqubits);
    DensityMatrix::from_matrix_unchecked(m)
}

impl ParametricCircuit {
    pub fn new(gates: Vec<NoisyGate>, initial: PureState) -> Result<Self> {
        let n = initial.nqubits();
        if gates.is_empty() {
            return Err(Error::param("circuit has no gates"));
        }
        for g in &gates {
            if g.nqubits() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.nqubits() });
            }
        }
        Ok(ParametricCircuit { nqubits: n, gates, initial })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    /// Number of parameters `P`, one per gate.
    pub fn nparams(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[NoisyGate] {
        &self.gates
    }

    pub fn initial_state(&self) -> &PureState {
        &self.initial
    }

    pub fn is_noiseless(&self) -> bool {
        self.gates.iter().all(|g| g.noise.is_none())
    }

    /// The same circuit with every gate noiseless.
    pub fn ideal(&self) -> ParametricCircuit {
        ParametricCircuit {
            nqubits: self.nqubits,
            gates: self.gates.iter().map(NoisyGate::ideal).collect(),
            initial: self.initial.clone(),
        }
    }

    /// Recompiles every gate with `noise`.
    pub fn with_noise(&self, noise: &GateNoise) -> Result<ParametricCircuit> {
        let gates = self
            .gates
            .iter()
            .enumerate()
            .map(|(j, g)| NoisyGate::with_seed(g.generator.clone(), noise.clone(), j as u64))
            .collect::<Result<_>>()?;
        ParametricCircuit::new(gates, self.initial.clone())
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.gates.len() {
            return Err(Error::ParameterCount { expected: self.gates.len(), found: theta.len() });
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::param(format!("non-finite parameter {bad}")));
        }
        Ok(())
    }

    /// `ρ(θ)`.
    pub fn evolve(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_params(theta)?;
        let mut rho = self.initial.to_density();
        for (g, &t) in self.gates.iter().zip(theta) {
            rho = forward_density(self.nqubits, g.apply_matrix(rho.matrix(), t));
            let drift = rho.repair();
            if drift > GATE_DRIFT_TOL {
                return Err(Error::Invariant(format!("gate changed the trace by {drift}")));
            }
        }
        Ok(rho)
    }

    /// `|ψ(θ)⟩` for a noiseless circuit.
    pub fn evolve_pure(&self, theta: &[f64]) -> Result<PureState> {
        self.evolve_pure_range(self.initial.clone(), theta, 0..self.gates.len())
    }

    /// Applies gates `range` (using the matching entries of `theta`) to `psi`.
    pub fn evolve_pure_range(&self, mut psi: PureState, theta: &[f64], range: std::ops::Range<usize>) -> Result<PureState> {
        self.check_params(theta)?;
        for j in range {
            self.gates[j].apply_pure(psi.amplitudes_mut(), theta[j])?;
        }
        Ok(psi)
    }

    /// `ρ(θ)` together with every `∂ρ/∂θ_j`, propagated exactly by the
    /// product rule.
    pub fn evolve_with_derivatives(&self, theta: &[f64]) -> Result<(DensityMatrix, Vec<CMatrix>)> {
        self.check_params(theta)?;
        let d = 1usize << self.nqubits;
        let mut rho = self.initial.to_density().into_matrix();
        let mut derivs = vec![CMatrix::zeros(d, d); self.gates.len()];
        for (j, (g, &t)) in self.gates.iter().zip(theta).enumerate() {
            for step in &g.steps {
                rho = step.apply(&rho, t);
                // Derivatives of gates not yet reached are exactly zero.
                derivs[..j].par_iter_mut().for_each(|m| *m = step.apply(m, t));
                let carried = step.apply(&derivs[j], t);
                derivs[j] = if step.is_parametric() { carried + step.generator_commutator(&rho) } else { carried };
            }
            linalg::hermitize(&mut rho);
        }
        let mut out = forward_density(self.nqubits, rho);
        let drift = out.repair();
        if drift > GATE_DRIFT_TOL * self.gates.len() as f64 {
            return Err(Error::Invariant(format!("evolution changed the trace by {drift}")));
        }
        for m in &mut derivs {
            linalg::hermitize(m);
        }
        Ok((out, derivs))
    }

    /// `C(θ) = Tr[H ρ(θ)]`.
    pub fn cost(&self, theta: &[f64], h: &PauliSum) -> Result<f64> {
        self.check_observable(h)?;
        self.evolve(theta)?.expectation(h)
    }

    fn check_observable(&self, h: &PauliSum) -> Result<()> {
        if h.nqubits() != self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.nqubits, found: h.nqubits() });
        }
        Ok(())
    }

    /// Cost and its exact gradient by one forward and one backward
    /// (Heisenberg-picture) sweep.
    pub fn cost_and_gradient(&self, theta: &[f64], h: &PauliSum) -> Result<(f64, Vec<f64>)> {
        self.check_params(theta)?;
        self.check_observable(h)?;
        if self.is_noiseless() {
            return self.pure_cost_and_gradient(theta, h);
        }
        self.mixed_cost_and_gradient(theta, h)
    }

    fn mixed_cost_and_gradient(&self, theta: &[f64], h: &PauliSum) -> Result<(f64, Vec<f64>)> {
        let mut rho = self.initial.to_density().into_matrix();
        let mut snapshots = Vec::new();
        for (g, &t) in self.gates.iter().zip(theta) {
            for step in &g.steps {
                rho = step.apply(&rho, t);
                if step.is_parametric() {
                    snapshots.push(rho.clone());
                }
            }
        }
        let mut b = h.realize()?;
        let cost = linalg::trace_product(&b, &rho).re;
        let mut grad = vec![0.0; self.gates.len()];
        for (j, (g, &t)) in self.gates.iter().zip(theta).enumerate().rev() {
            for step in g.steps.iter().rev() {
                if step.is_parametric() {
                    let snap = snapshots.pop().expect("one snapshot per rotation");
                    grad[j] += match step {
                        Step::Rotation { action, weight } => (C64::new(0.0, -*weight) * action.commutator_trace(&b, &snap)).re,
                        _ => linalg::trace_product(&b, &step.generator_commutator(&snap)).re,
                    };
                }
                b = step.apply_adjoint(&b, t);
            }
        }
        Ok((cost, grad))
    }

    fn pure_cost_and_gradient(&self, theta: &[f64], h: &PauliSum) -> Result<(f64, Vec<f64>)> {
        let mut psi = self.evolve_pure(theta)?.amplitudes().to_vec();
        let mut lam = vec![C64::new(0.0, 0.0); psi.len()];
        for (w, s) in h.terms() {
            for (l, a) in lam.iter_mut().zip(s.action().apply_vector(&psi)) {
                *l += a * *w;
            }
        }
        let inner = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        let cost = inner(&psi, &lam).re;
        let mut grad = vec![0.0; self.gates.len()];
        for (j, (g, &t)) in self.gates.iter().zip(theta).enumerate().rev() {
            for step in g.steps.iter().rev() {
                grad[j] += 2.0 * inner(&lam, &step.generator_vector(&psi)).re;
                step.apply_pure(&mut psi, -t);
                step.apply_pure(&mut lam, -t);
            }
        }
        Ok((cost, grad))
    }

    /// Exact gradient `∂_j C`.
    pub fn gradient(&self, theta: &[f64], h: &PauliSum) -> Result<Vec<f64>> {
        Ok(self.cost_and_gradient(theta, h)?.1)
    }

    /// One line per gate describing the elementary decomposition.
    pub fn decomposition(&self) -> Vec<String> {
        self.gates.iter().map(NoisyGate::decomposition).collect()
    }
}

/// Antiferromagnetic Ising ring `Σ_l Z_l Z_{l+1}` with periodic boundary.
pub fn ising_ring(n: usize) -> Result<PauliSum> {
    if n < 3 {
        return Err(Error::param(format!("a ring needs at least 3 qubits, got {n}")));
    }
    let terms = (0..n).map(|l| {
        let mut axes = vec![Pauli::I; n];
        axes[l] = Pauli::Z;
        axes[(l + 1) % n] = Pauli::Z;
        (1.0, PauliString::new(axes).expect("nonempty"))
    });
    PauliSum::from_terms(n, terms)
}

/// Transverse-field mixer `−Σ_l X_l`.
pub fn transverse_mixer(n: usize) -> Result<PauliSum> {
    PauliSum::from_terms(n, (0..n).map(|l| (-1.0, PauliString::single(n, l, Pauli::X))))
}

/// QAOA: `e^{-iβ_𝒫 H_β} e^{-iγ_𝒫 H_γ} ⋯ e^{-iβ_1 H_β} e^{-iγ_1 H_γ} |+⟩^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaSpec {
    pub nqubits: usize,
    pub layers: usize,
    pub cost: PauliSum,
    pub mixer: PauliSum,
}

impl QaoaSpec {
    /// The Ising-ring instance with the transverse mixer.
    pub fn ring(nqubits: usize, layers: usize) -> Result<Self> {
        Ok(QaoaSpec { nqubits, layers, cost: ising_ring(nqubits)?, mixer: transverse_mixer(nqubits)? })
    }

    pub fn nparams(&self) -> usize {
        2 * self.layers
    }
}

/// Builds the circuit `[γ₁, β₁, …, γ_𝒫, β_𝒫]` with `noise` on every gate.
pub fn build_qaoa(spec: &QaoaSpec, noise: &GateNoise) -> Result<ParametricCircuit> {
    if spec.layers == 0 {
        return Err(Error::param("QAOA needs at least one layer"));
    }
    if spec.cost.nqubits() != spec.nqubits || spec.mixer.nqubits() != spec.nqubits {
        return Err(Error::DimensionMismatch { expected: spec.nqubits, found: spec.cost.nqubits().max(spec.mixer.nqubits()) });
    }
    if !spec.cost.is_diagonal() {
        return Err(Error::param("QAOA cost Hamiltonian must be diagonal"));
    }
    let mut gates = Vec::with_capacity(spec.nparams());
    for layer in 0..spec.layers {
        for (k, generator) in [&spec.cost, &spec.mixer].into_iter().enumerate() {
            let index = (2 * layer + k) as u64;
            gates.push(NoisyGate::with_seed(generator.clone(), noise.clone(), index)?);
        }
    }
    ParametricCircuit::new(gates, plus_state(spec.nqubits)?)
}
