//! Pure states and density matrices, with the expectation values, fidelities
//! and Born-rule sampling used by the estimators and bounds.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::linalg::{self, ZERO};
use crate::pauli::PauliSum;
use crate::rng;
use crate::{CMatrix, Error, Result, C64, DEFAULT_QUBIT_CAP};

const PURE_NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;
/// Negative Born probabilities above this are treated as round-off.
const CLAMP_TOL: f64 = 1e-9;

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("register needs at least one qubit"));
    }
    if n > DEFAULT_QUBIT_CAP {
        return Err(Error::QubitCap { requested: n, cap: DEFAULT_QUBIT_CAP });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    nqubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let d = amplitudes.len();
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::param(format!("amplitude count {d} is not a power of two")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PureState { nqubits: d.trailing_zeros() as usize, amplitudes })
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: Vec<C64>) -> Self {
        let nqubits = amplitudes.len().trailing_zeros() as usize;
        PureState { nqubits, amplitudes }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let d = 1usize << n;
        if index >= d {
            return Err(Error::param(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amplitudes = vec![ZERO; d];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(PureState { nqubits: n, amplitudes })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let data = CMatrix::from_fn(d, d, |r, c| self.amplitudes[r] * self.amplitudes[c].conj());
        DensityMatrix { nqubits: self.nqubits, data }
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        if h.nqubits() != self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.nqubits, found: h.nqubits() });
        }
        let mut acc = ZERO;
        for (coef, s) in h.terms() {
            let sv = s.action().apply_vector(&self.amplitudes);
            let term: C64 = self.amplitudes.iter().zip(&sv).map(|(a, b)| a.conj() * b).sum();
            acc += term * *coef;
        }
        Ok(acc.re)
    }
}

/// `|+⟩^{⊗N}`.
pub fn plus_state(n: usize) -> Result<PureState> {
    check_qubits(n)?;
    let d = 1usize << n;
    let amp = C64::new((d as f64).sqrt().recip(), 0.0);
    Ok(PureState { nqubits: n, amplitudes: vec![amp; d] })
}

/// Dense density matrix over N qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    nqubits: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-10).
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let d = data.nrows();
        if d != data.ncols() {
            return Err(Error::DimensionMismatch { expected: d, found: data.ncols() });
        }
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::param(format!("dimension {d} is not a power of two")));
        }
        if linalg::hermiticity_defect(&data) > DENSITY_TOL {
            return Err(Error::Invariant("density matrix is not Hermitian".into()));
        }
        let tr = linalg::trace(&data).re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotNormalized(tr));
        }
        let min = linalg::eigvalsh(&data)[0];
        if min < -DENSITY_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(DensityMatrix { nqubits: d.trailing_zeros() as usize, data })
    }

    pub(crate) fn from_matrix_unchecked(data: CMatrix) -> Self {
        let nqubits = data.nrows().trailing_zeros() as usize;
        DensityMatrix { nqubits, data }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let d = 1usize << n;
        Ok(DensityMatrix {
            nqubits: n,
            data: CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0),
        })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.data).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.data, &self.data).re
    }

    /// Symmetrizes and renormalizes in place; returns the largest
    /// correction applied (Hermiticity defect or trace drift).
    pub fn repair(&mut self) -> f64 {
        let defect = linalg::hermiticity_defect(&self.data);
        linalg::hermitize(&mut self.data);
        let tr = self.trace();
        self.data /= C64::new(tr, 0.0);
        defect.max((tr - 1.0).abs())
    }

    fn check_observable(&self, h: &PauliSum) -> Result<()> {
        if h.nqubits() != self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.nqubits, found: h.nqubits() });
        }
        Ok(())
    }

    /// `Tr[ρH]`.
    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        self.check_observable(h)?;
        let value: C64 = if let Some(diag) = h.diagonal() {
            diag.iter().enumerate().map(|(x, e)| self.data[(x, x)] * *e).sum()
        } else {
            h.terms().iter().map(|(c, s)| s.action().trace_with(&self.data) * *c).sum()
        };
        if value.im.abs() > DENSITY_TOL {
            return Err(Error::Invariant(format!("expectation has imaginary part {}", value.im)));
        }
        Ok(value.re)
    }

    /// `Tr[ρH²] − Tr[ρH]²`, clamped at zero for round-off.
    pub fn variance(&self, h: &PauliSum) -> Result<f64> {
        self.check_observable(h)?;
        let mean = self.expectation(h)?;
        let second = if let Some(diag) = h.diagonal() {
            diag.iter().enumerate().map(|(x, e)| self.data[(x, x)].re * e * e).sum()
        } else {
            let hm = h.realize()?;
            linalg::trace_product(&self.data, &(&hm * &hm)).re
        };
        let var = second - mean * mean;
        if var < -CLAMP_TOL {
            return Err(Error::Invariant(format!("negative variance {var}")));
        }
        Ok(var.max(0.0))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.nqubits() != self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.nqubits, found: psi.nqubits() });
        }
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for c in 0..a.len() {
            let mut col = ZERO;
            for r in 0..a.len() {
                col += a[r].conj() * self.data[(r, c)];
            }
            acc += col * a[c];
        }
        Ok(acc.re)
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.nqubits != self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.nqubits, found: other.nqubits });
        }
        Ok(0.5 * linalg::trace_norm_hermitian(&(&self.data - &other.data)))
    }

    /// Born distribution of measuring `h` in its eigenbasis (computational
    /// basis for I/Z-only observables).
    pub fn born_distribution(&self, h: &PauliSum) -> Result<BornDistribution> {
        self.check_observable(h)?;
        let (raw, energies) = if let Some(diag) = h.diagonal() {
            ((0..self.dim()).map(|x| self.data[(x, x)].re).collect::<Vec<_>>(), diag)
        } else {
            let (vals, vecs) = linalg::eigh(&h.realize()?);
            let probs = (0..vals.len())
                .map(|k| {
                    let v = vecs.column(k);
                    (v.adjoint() * &self.data * v)[(0, 0)].re
                })
                .collect();
            (probs, vals)
        };
        BornDistribution::new(raw, energies)
    }

    /// Draws `shots` i.i.d. outcomes `(label, E_label)` from the Born rule.
    pub fn sample_outcomes(&self, h: &PauliSum, shots: usize, seed: u64) -> Result<Vec<Outcome>> {
        if shots == 0 {
            return Err(Error::param("shots must be at least 1"));
        }
        let dist = self.born_distribution(h)?;
        Ok(dist.sample(shots, seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub label: usize,
    pub energy: f64,
}

/// Outcome probabilities with their associated energies.
#[derive(Debug, Clone)]
pub struct BornDistribution {
    pub probabilities: Vec<f64>,
    pub energies: Vec<f64>,
}

impl BornDistribution {
    pub fn new(mut probabilities: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        for p in probabilities.iter_mut() {
            if *p < -CLAMP_TOL {
                return Err(Error::NegativeEigenvalue(*p));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(total));
        }
        Ok(BornDistribution { probabilities, energies })
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().zip(&self.energies).map(|(p, e)| p * e).sum()
    }

    pub fn sample(&self, shots: usize, seed: u64) -> Vec<Outcome> {
        let dist = WeightedIndex::new(&self.probabilities).expect("probabilities are normalized");
        let mut rng = rng::rng(seed);
        (0..shots)
            .map(|_| {
                let label = dist.sample(&mut rng);
                Outcome { label, energy: self.energies[label] }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString};
    use proptest::prelude::*;

    fn ring(n: usize) -> PauliSum {
        PauliSum::from_terms(
            n,
            (0..n).map(|l| {
                let mut axes = vec![Pauli::I; n];
                axes[l] = Pauli::Z;
                axes[(l + 1) % n] = Pauli::Z;
                (1.0, PauliString::new(axes).unwrap())
            }),
        )
        .unwrap()
    }

    fn z1() -> PauliSum {
        PauliSum::single(1.0, "Z".parse().unwrap())
    }

    #[test]
    fn plus_state_amplitudes() {
        let p1 = plus_state(1).unwrap();
        for a in p1.amplitudes() {
            assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let p2 = plus_state(2).unwrap();
        assert!(p2.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15));
        assert!(plus_state(0).is_err());
        assert!(plus_state(13).is_err());
        assert!(plus_state(4).unwrap().expectation(&ring(4)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn expectation_examples() {
        let zero = PureState::basis(1, 0).unwrap().to_density();
        assert!((zero.expectation(&z1()).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(mixed.expectation(&ring(4)).unwrap().abs() < 1e-15);
        let plus = plus_state(6).unwrap().to_density();
        assert!(plus.expectation(&ring(6)).unwrap().abs() < 1e-13);
        assert!(matches!(plus.expectation(&ring(4)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn variance_examples() {
        let zero = PureState::basis(1, 0).unwrap().to_density();
        assert!(zero.variance(&z1()).unwrap().abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((mixed.variance(&z1()).unwrap() - 1.0).abs() < 1e-15);
        for n in 3..=6 {
            let plus = plus_state(n).unwrap().to_density();
            // Independent route: dense H² trace.
            let hm = ring(n).realize().unwrap();
            let dense = linalg::trace_product(plus.matrix(), &(&hm * &hm)).re;
            assert!((dense - n as f64).abs() < 1e-10);
            assert!((plus.variance(&ring(n)).unwrap() - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_examples() {
        let psi = plus_state(2).unwrap();
        assert!((psi.to_density().fidelity_pure(&psi).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((mixed.fidelity_pure(&plus_state(3).unwrap()).unwrap() - 0.125).abs() < 1e-14);
        let one = PureState::basis(1, 1).unwrap().to_density();
        assert_eq!(one.fidelity_pure(&PureState::basis(1, 0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_sampling_of_basis_state() {
        let rho = PureState::basis(3, 0).unwrap().to_density();
        let out = rho.sample_outcomes(&ring(3), 50, 1).unwrap();
        assert!(out.iter().all(|o| o.label == 0 && o.energy == 3.0));
    }

    #[test]
    fn binomial_sampling_of_mixed_qubit() {
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let shots = 100_000;
        let out = rho.sample_outcomes(&z1(), shots, 11).unwrap();
        let mean = out.iter().map(|o| o.energy).sum::<f64>() / shots as f64;
        assert!(mean.abs() < 4.0 / (shots as f64).sqrt());
        assert!(rho.sample_outcomes(&z1(), 0, 1).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let rho = plus_state(3).unwrap().to_density();
        let a = rho.sample_outcomes(&ring(3), 200, 5).unwrap();
        let b = rho.sample_outcomes(&ring(3), 200, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let mut m = DensityMatrix::maximally_mixed(1).unwrap().into_matrix();
        m *= C64::new(2.0, 0.0);
        assert!(matches!(DensityMatrix::from_matrix(m), Err(Error::NotNormalized(_))));
    }

    fn random_density(seed: u64) -> DensityMatrix {
        use rand::Rng;
        let mut rng = rng::rng(seed);
        let g = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut m = &g * g.adjoint();
        let tr = linalg::trace(&m);
        m /= tr;
        DensityMatrix::from_matrix(m).unwrap()
    }

    fn random_observable(seed: u64) -> PauliSum {
        use rand::Rng;
        let mut rng = rng::rng(seed ^ 0xABCD);
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let terms: Vec<_> = (0..4)
            .map(|_| {
                let axes = (0..2).map(|_| letters[rng.random_range(0..4)]).collect();
                (rng.random::<f64>() * 2.0 - 1.0, PauliString::new(axes).unwrap())
            })
            .collect();
        PauliSum::from_terms(2, terms).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn term_wise_expectation_matches_dense_trace(seed in any::<u64>()) {
            let rho = random_density(seed);
            let h = random_observable(seed);
            let dense = linalg::trace_product(rho.matrix(), &h.realize().unwrap()).re;
            prop_assert!((rho.expectation(&h).unwrap() - dense).abs() < 1e-10);
        }

        #[test]
        fn empirical_mean_within_five_standard_errors(seed in any::<u64>()) {
            let rho = random_density(seed);
            let h = random_observable(seed);
            let shots = 100_000;
            let out = rho.sample_outcomes(&h, shots, seed).unwrap();
            let mean = out.iter().map(|o| o.energy).sum::<f64>() / shots as f64;
            let sd = rho.variance(&h).unwrap().sqrt();
            let exact = rho.expectation(&h).unwrap();
            prop_assert!((mean - exact).abs() <= 5.0 * sd / (shots as f64).sqrt() + 1e-12);
        }

        #[test]
        fn unit_fidelity_iff_close_in_trace_distance(seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = rng::rng(seed);
            let amps: Vec<C64> = (0..4).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let psi = PureState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap();
            let same = psi.to_density();
            prop_assert!((same.fidelity_pure(&psi).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!(same.trace_distance(&psi.to_density()).unwrap() <= 1e-6);
            let other = random_density(seed);
            let f = other.fidelity_pure(&psi).unwrap();
            let td = other.trace_distance(&psi.to_density()).unwrap();
            prop_assert!(f < 1.0 - 1e-9);
            prop_assert!(td > 1e-6);
            prop_assert!(f <= 1.0 + 1e-10 && f >= -1e-12);
        }
    }
}
