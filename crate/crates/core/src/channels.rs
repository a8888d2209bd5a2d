//! Quantum channels in Kraus form acting on a subset of register qubits,
//! their Choi matrices, and Choi-based bounds on the diamond distance.
//!
//! The σ^z channel `(1−η)ρ + η ZρZ` is named `z_depolarizing` after the
//! usage in the noisy-QAOA literature, although it only dephases: it leaves
//! Z untouched and contracts X and Y by `1 − 2η`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use crate::linalg::{self, LocalLayout, ONE, ZERO};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::state::DensityMatrix;
use crate::{rng, CMatrix, Error, Result, C64, DEFAULT_QUBIT_CAP};

/// Tolerance on `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Any linear map on operators of a fixed register, used to build Choi
/// matrices by definition.
pub trait LinearMap {
    fn nqubits(&self) -> usize;
    fn map(&self, m: &CMatrix) -> CMatrix;
}

/// A completely positive map `ρ ↦ Σ_k K_k ρ K_k†` whose Kraus operators act
/// on `targets` (first target is the most significant local qubit).
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    targets: Vec<usize>,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(targets: Vec<usize>, ops: Vec<CMatrix>) -> Result<Self> {
        let d = 1usize << targets.len();
        if ops.is_empty() {
            return Err(Error::param("channel needs at least one Kraus operator"));
        }
        for k in &ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
        }
        let mut sorted = targets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() {
            return Err(Error::param("duplicate target qubits"));
        }
        Ok(KrausChannel { targets, ops })
    }

    pub fn identity(targets: Vec<usize>) -> Self {
        let d = 1usize << targets.len();
        KrausChannel { targets, ops: vec![CMatrix::identity(d, d)] }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Local Hilbert-space dimension `d = 2^k`.
    pub fn dim(&self) -> usize {
        1usize << self.targets.len()
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let sum = self.ops.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        linalg::max_abs(&(sum - CMatrix::identity(d, d)))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.completeness_defect() <= COMPLETENESS_TOL
    }

    fn register_qubits(&self, m: &CMatrix) -> Result<usize> {
        let d = m.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::param(format!("dimension {d} is not a register dimension")));
        }
        let n = d.trailing_zeros() as usize;
        if let Some(&q) = self.targets.iter().max() {
            if q >= n {
                return Err(Error::DimensionMismatch { expected: q + 1, found: n });
            }
        }
        Ok(n)
    }

    /// Applies the channel to any register operator (not necessarily a state).
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        let n = self.register_qubits(m)?;
        let layout = LocalLayout::new(&self.targets, n);
        Ok(self.apply_with_layout(m, &layout))
    }

    pub(crate) fn apply_with_layout(&self, m: &CMatrix, layout: &LocalLayout) -> CMatrix {
        if self.ops.len() == 1 {
            let mut out = m.clone();
            linalg::apply_left(&mut out, &self.ops[0], layout);
            linalg::apply_right_adjoint(&mut out, &self.ops[0], layout);
            return out;
        }
        let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
        for k in &self.ops {
            let mut term = m.clone();
            linalg::apply_left(&mut term, k, layout);
            linalg::apply_right_adjoint(&mut term, k, layout);
            acc += term;
        }
        acc
    }

    /// Heisenberg-picture adjoint `B ↦ Σ K† B K`.
    pub fn apply_adjoint_matrix(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.register_qubits(b)?;
        let layout = LocalLayout::new(&self.targets, n);
        Ok(self.adjoint_with_layout(b, &layout))
    }

    pub(crate) fn adjoint_with_layout(&self, b: &CMatrix, layout: &LocalLayout) -> CMatrix {
        let mut acc = CMatrix::zeros(b.nrows(), b.ncols());
        for k in &self.ops {
            let kd = k.adjoint();
            let mut term = b.clone();
            linalg::apply_left(&mut term, &kd, layout);
            linalg::apply_right_adjoint(&mut term, &kd, layout);
            acc += term;
        }
        acc
    }

    /// Applies the channel to a state, symmetrizing the result.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        let mut out = DensityMatrix::from_matrix_unchecked(out);
        let drift = out.repair();
        if drift > COMPLETENESS_TOL {
            return Err(Error::Invariant(format!("channel changed the trace by {drift}")));
        }
        Ok(out)
    }

    /// Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` on the local `d² × d²` space.
    pub fn choi(&self) -> Result<CMatrix> {
        if 2 * self.targets.len() > DEFAULT_QUBIT_CAP {
            return Err(Error::QubitCap { requested: 2 * self.targets.len(), cap: DEFAULT_QUBIT_CAP });
        }
        let d = self.dim();
        let mut j = CMatrix::zeros(d * d, d * d);
        for k in &self.ops {
            // |v⟩ = Σ_i |i⟩ ⊗ K|i⟩
            let v = nalgebra::DVector::from_fn(d * d, |idx, _| k[(idx % d, idx / d)]);
            j += &v * v.adjoint();
        }
        Ok(j)
    }

    /// Sequential composition: `self` first, then `next`. Both must share
    /// the same target list.
    pub fn then(&self, next: &KrausChannel) -> Result<KrausChannel> {
        if self.targets != next.targets {
            return Err(Error::param("composition needs identical targets"));
        }
        let ops = next
            .ops
            .iter()
            .flat_map(|b| self.ops.iter().map(move |a| b * a))
            .collect();
        KrausChannel::new(self.targets.clone(), ops)
    }
}

impl LinearMap for KrausChannel {
    fn nqubits(&self) -> usize {
        self.targets.len()
    }

    fn map(&self, m: &CMatrix) -> CMatrix {
        let local: Vec<usize> = (0..self.targets.len()).collect();
        let layout = LocalLayout::new(&local, self.targets.len());
        self.apply_with_layout(m, &layout)
    }
}

/// Choi matrix of an arbitrary linear map, by definition.
pub fn choi_of(map: &impl LinearMap) -> Result<CMatrix> {
    let n = map.nqubits();
    if 2 * n > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap { requested: 2 * n, cap: DEFAULT_QUBIT_CAP });
    }
    let d = 1usize << n;
    let mut j = CMatrix::zeros(d * d, d * d);
    let mut basis = CMatrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            basis[(i, k)] = ONE;
            let image = map.map(&basis);
            basis[(i, k)] = ZERO;
            for a in 0..d {
                for b in 0..d {
                    j[(i * d + a, k * d + b)] = image[(a, b)];
                }
            }
        }
    }
    Ok(j)
}

/// Two-sided bounds on the diamond distance from Choi matrices:
/// `‖J_A − J_B‖₁ / d ≤ ‖A − B‖_⋄ ≤ ‖J_A − J_B‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn choi_distance_bounds(ja: &CMatrix, jb: &CMatrix, d: usize) -> Result<DistanceBounds> {
    if ja.nrows() != jb.nrows() {
        return Err(Error::DimensionMismatch { expected: ja.nrows(), found: jb.nrows() });
    }
    let norm = linalg::trace_norm_hermitian(&(ja - jb));
    Ok(DistanceBounds { lower: norm / d as f64, upper: norm })
}

pub fn channel_distance_bounds(a: &KrausChannel, b: &KrausChannel) -> Result<DistanceBounds> {
    if a.targets.len() != b.targets.len() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a.targets != b.targets {
        return Err(Error::param("channels act on different qubits"));
    }
    choi_distance_bounds(&a.choi()?, &b.choi()?, a.dim())
}

/// Local matrix of `x` on the qubits in `support`, first qubit most significant.
pub(crate) fn local_generator(x: &PauliSum, support: &[usize]) -> CMatrix {
    let d = 1usize << support.len();
    let mut m = CMatrix::zeros(d, d);
    for (h, s) in x.terms() {
        let local = support
            .iter()
            .map(|&q| s.axes()[q].matrix())
            .reduce(|a, b| linalg::kron(&a, &b))
            .unwrap_or_else(|| CMatrix::identity(1, 1));
        m += local * C64::new(*h, 0.0);
    }
    m
}

/// `e^{-iθX}` restricted to the support of `X`, via eigendecomposition.
pub(crate) fn exp_i_local(x_local: &CMatrix, theta: f64) -> CMatrix {
    let (vals, vecs) = linalg::eigh(x_local);
    let phases = nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::from_polar(1.0, -theta * l)),
    );
    &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint()
}

fn generator_targets(x: &PauliSum) -> Vec<usize> {
    let s = x.support();
    if s.is_empty() {
        vec![0]
    } else {
        s
    }
}

/// The ideal gate `ρ ↦ e^{-iθX} ρ e^{iθX}` as a single-Kraus channel on the
/// support of `X`.
pub fn unitary_channel(x: &PauliSum, theta: f64) -> Result<KrausChannel> {
    if x.nqubits() > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap { requested: x.nqubits(), cap: DEFAULT_QUBIT_CAP });
    }
    let targets = generator_targets(x);
    let u = exp_i_local(&local_generator(x, &targets), theta);
    KrausChannel::new(targets, vec![u])
}

/// Per-qubit `D_l(ρ) = (1−η)ρ + η Z_l ρ Z_l`, tensored across `qubits`.
pub fn z_depolarizing(eta: f64, qubits: &[usize]) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param(format!("dephasing strength {eta} outside [0, 1]")));
    }
    if qubits.is_empty() {
        return Err(Error::param("dephasing needs at least one qubit"));
    }
    let single = [
        Pauli::I.matrix() * C64::new((1.0 - eta).sqrt(), 0.0),
        Pauli::Z.matrix() * C64::new(eta.sqrt(), 0.0),
    ];
    let mut ops = vec![CMatrix::identity(1, 1)];
    for _ in qubits {
        ops = ops
            .iter()
            .flat_map(|a| single.iter().map(move |b| linalg::kron(a, b)))
            .collect();
    }
    KrausChannel::new(qubits.to_vec(), ops)
}

/// Dephasing-like strength produced by Gaussian jitter of standard deviation
/// `sigma` on the rotation angle of an involutory generator.
pub fn fluctuation_strength(sigma: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * sigma * sigma).exp())
}

fn involutory_local(x: &PauliSum) -> Result<(Vec<usize>, CMatrix)> {
    let targets = generator_targets(x);
    let local = local_generator(x, &targets);
    let d = local.nrows();
    if linalg::max_abs(&(&local * &local - CMatrix::identity(d, d))) > 1e-10 {
        return Err(Error::NotInvolutory);
    }
    Ok((targets, local))
}

/// Average of `e^{-iϑX}ρe^{iϑX}` over `ϑ ~ N(0, σ²)` for `X² = 1`:
/// `(1−η)ρ + η XρX` with `η = (1 − e^{−2σ²})/2`.
pub fn gaussian_fluctuation_channel(x: &PauliSum, sigma: f64) -> Result<KrausChannel> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("fluctuation width {sigma} must be finite and nonnegative")));
    }
    let (targets, local) = involutory_local(x)?;
    let eta = fluctuation_strength(sigma);
    let d = local.nrows();
    KrausChannel::new(
        targets,
        vec![
            CMatrix::identity(d, d) * C64::new((1.0 - eta).sqrt(), 0.0),
            local * C64::new(eta.sqrt(), 0.0),
        ],
    )
}

/// Gauss–Hermite nodes and weights for `∫ f(x) e^{−x²} dx` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut off: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    let mut vecs = DMatrix::<f64>::identity(n, n);
    crate::linalg::tridiagonal_ql(&mut nodes, &mut off, Some(&mut vecs));
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = vecs[(0, k)];
            (nodes[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// The Gaussian-jitter average evaluated by `nodes`-point Gauss–Hermite
/// quadrature, as a mixture-of-unitaries channel. Works for any generator.
pub fn gaussian_fluctuation_quadrature(x: &PauliSum, sigma: f64, nodes: usize) -> Result<KrausChannel> {
    let targets = generator_targets(x);
    let local = local_generator(x, &targets);
    let (xs, ws) = gauss_hermite(nodes);
    let ops = xs
        .iter()
        .zip(&ws)
        .map(|(&xi, &wi)| {
            let angle = std::f64::consts::SQRT_2 * sigma * xi;
            exp_i_local(&local, angle) * C64::new((wi / std::f64::consts::PI.sqrt()).sqrt(), 0.0)
        })
        .collect();
    KrausChannel::new(targets, ops)
}

/// Monte-Carlo estimate of the Gaussian-jitter channel: averages the
/// unitary over `samples` draws of `ϑ ~ N(0, σ²)` and returns the trace
/// distance between the normalized Choi states of the empirical and the
/// analytic channel.
pub fn monte_carlo_fluctuation_check(x: &PauliSum, sigma: f64, samples: usize, seed: u64) -> Result<f64> {
    if samples < 100 {
        return Err(Error::param("Monte-Carlo check needs at least 100 samples"));
    }
    let analytic = gaussian_fluctuation_channel(x, sigma)?;
    let (targets, local) = involutory_local(x)?;
    let d = local.nrows();
    let mut empirical = CMatrix::zeros(d * d, d * d);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
        let mut rng = rng::rng(seed);
        let w = C64::new(1.0 / samples as f64, 0.0);
        for _ in 0..samples {
            let angle: f64 = normal.sample(&mut rng);
            let u = KrausChannel::new(targets.clone(), vec![exp_i_local(&local, angle)])?;
            empirical += u.choi()? * w;
        }
    } else {
        empirical = KrausChannel::identity(targets).choi()?;
    }
    let diff = (empirical - analytic.choi()?) / C64::new(d as f64, 0.0);
    Ok(0.5 * linalg::trace_norm_hermitian(&diff))
}

/// Zero-temperature thermal relaxation of one qubit over a gate of duration
/// `t`: populations relax toward |0⟩ with `1 − e^{−t/T1}`, coherences decay
/// by `e^{−t/T2}`.
pub fn thermal_relaxation(t1: f64, t2: f64, t: f64, qubit: usize) -> Result<KrausChannel> {
    if !(t1 > 0.0) || !(t2 > 0.0) {
        return Err(Error::param(format!("relaxation times must be positive (T1={t1}, T2={t2})")));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::param(format!("T2={t2} exceeds 2*T1={}", 2.0 * t1)));
    }
    if !(t >= 0.0) {
        return Err(Error::param(format!("gate time {t} must be nonnegative")));
    }
    let (gamma, lambda) = if t.is_infinite() {
        (1.0, if t2 == 2.0 * t1 { 1.0 } else { 0.0 })
    } else {
        (1.0 - (-t / t1).exp(), (t * (0.5 / t1 - 1.0 / t2)).exp())
    };
    let r = |x: f64| C64::new(x, 0.0);
    let damp = [
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, r((1.0 - gamma).sqrt())]),
        CMatrix::from_row_slice(2, 2, &[ZERO, r(gamma.sqrt()), ZERO, ZERO]),
    ];
    let dephase = [
        Pauli::I.matrix() * r(((1.0 + lambda) / 2.0).sqrt()),
        Pauli::Z.matrix() * r(((1.0 - lambda) / 2.0).sqrt()),
    ];
    let ops = dephase
        .iter()
        .flat_map(|p| damp.iter().map(move |a| p * a))
        .collect();
    KrausChannel::new(vec![qubit], ops)
}

/// Symmetric depolarizing channel `(1−p)ρ + p·(I/d ⊗ Tr_targets ρ)` on `qubits`.
pub fn depolarizing(p: f64, qubits: &[usize]) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("depolarizing probability {p} outside [0, 1]")));
    }
    let k = qubits.len();
    if k == 0 {
        return Err(Error::param("depolarizing needs at least one qubit"));
    }
    let count = 1usize << (2 * k);
    let w_other = p / count as f64;
    let w_id = 1.0 - p + w_other;
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let ops = (0..count)
        .filter_map(|code| {
            let axes: Vec<Pauli> = (0..k).map(|j| letters[(code >> (2 * (k - 1 - j))) & 3]).collect();
            let w = if code == 0 { w_id } else { w_other };
            (w > 0.0).then(|| PauliString::new(axes).unwrap().realize() * C64::new(w.sqrt(), 0.0))
        })
        .collect();
    KrausChannel::new(qubits.to_vec(), ops)
}
