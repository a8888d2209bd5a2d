//! Pauli strings and Hermitian observables written as real-weighted sums of
//! Pauli strings.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::linalg::{self, I, ONE, ZERO};
use crate::{CMatrix, Error, Result, DEFAULT_QUBIT_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauli(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMatrix {
        let m = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &m)
    }
}

/// Bit-mask form of a Pauli string: `σ|x⟩ = phase(x) |x ⊕ xmask⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliAction {
    pub xmask: usize,
    pub zmask: usize,
    ny: u32,
}

impl PauliAction {
    /// Phase picked up by basis state `x`.
    #[inline]
    pub fn phase(&self, x: usize) -> C64 {
        let sign = if (x & self.zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let base = match self.ny % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        base * sign
    }

    fn phases(&self, d: usize) -> Vec<C64> {
        (0..d).map(|x| self.phase(x)).collect()
    }

    /// `σ · m` for a register matrix or column vector.
    pub fn left(&self, m: &CMatrix) -> CMatrix {
        let (rows, cols) = m.shape();
        let ph = self.phases(rows);
        let mut out = CMatrix::zeros(rows, cols);
        let (src, dst) = (m.as_slice(), out.as_mut_slice());
        for c in 0..cols {
            let base = c * rows;
            for x in 0..rows {
                dst[base + (x ^ self.xmask)] = ph[x] * src[base + x];
            }
        }
        out
    }

    /// `m · σ`.
    pub fn right(&self, m: &CMatrix) -> CMatrix {
        let (rows, cols) = m.shape();
        let ph = self.phases(cols);
        let mut out = CMatrix::zeros(rows, cols);
        let (src, dst) = (m.as_slice(), out.as_mut_slice());
        for c in 0..cols {
            // (mσ)[r, c] = m[r, c ⊕ xmask] · phase(c)
            let from = (c ^ self.xmask) * rows;
            for r in 0..rows {
                dst[c * rows + r] = src[from + r] * ph[c];
            }
        }
        out
    }

    /// `[σ, m]`.
    pub fn commutator(&self, m: &CMatrix) -> CMatrix {
        self.left(m) - self.right(m)
    }

    /// `Tr[b [σ, m]]` without forming the commutator.
    pub fn commutator_trace(&self, b: &CMatrix, m: &CMatrix) -> C64 {
        let d = m.nrows();
        let ph = self.phases(d);
        let (bs, ms) = (b.as_slice(), m.as_slice());
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..d {
            let cx = c ^ self.xmask;
            for r in 0..d {
                let rx = r ^ self.xmask;
                acc += bs[c * d + r] * ph[cx] * ms[r * d + cx] - ph[rx] * bs[c * d + rx] * ms[r * d + c];
            }
        }
        acc
    }

    /// `e^{-iφσ} m e^{iφσ}`, valid for any square `m`.
    pub fn rotate(&self, m: &CMatrix, phi: f64) -> CMatrix {
        let (s, c) = phi.sin_cos();
        let d = m.nrows();
        let ph = self.phases(d);
        let mut out = CMatrix::zeros(d, d);
        let cc = c * c;
        let ss = s * s;
        let cs = C64::new(0.0, -c * s);
        let (src, dst) = (m.as_slice(), out.as_mut_slice());
        for col in 0..d {
            let pc = ph[col];
            let base = col * d;
            let flipped = (col ^ self.xmask) * d;
            for row in 0..d {
                let row_f = row ^ self.xmask;
                let pr = ph[row_f];
                let sms = pr * src[flipped + row_f] * pc;
                let comm = pr * src[base + row_f] - src[flipped + row] * pc;
                dst[base + row] = src[base + row] * cc + sms * ss + cs * comm;
            }
        }
        out
    }

    /// `e^{-iφσ} ψ` for a state vector.
    pub fn rotate_vector(&self, psi: &mut [C64], phi: f64) {
        let (s, c) = phi.sin_cos();
        let old = psi.to_vec();
        let ms = C64::new(0.0, -s);
        for (x, amp) in psi.iter_mut().enumerate() {
            let src = x ^ self.xmask;
            *amp = old[x] * c + ms * self.phase(src) * old[src];
        }
    }

    /// `σ ψ` for a state vector.
    pub fn apply_vector(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; psi.len()];
        for (x, amp) in psi.iter().enumerate() {
            out[x ^ self.xmask] = self.phase(x) * amp;
        }
        out
    }

    /// `Tr[m σ]`.
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        // Tr[mσ] = Σ_x (mσ)[x,x] = Σ_x m[x, x⊕xmask] phase(x)
        (0..m.nrows())
            .map(|x| m[(x, x ^ self.xmask)] * self.phase(x))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    axes: Vec<Pauli>,
}

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::param("Pauli string must cover at least one qubit"));
        }
        Ok(PauliString { axes })
    }

    pub fn identity(n: usize) -> Self {
        PauliString { axes: vec![Pauli::I; n.max(1)] }
    }

    /// Single non-identity letter `p` on qubit `q` of an n-qubit register.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut axes = vec![Pauli::I; n];
        axes[q] = p;
        PauliString { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.axes.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|p| *p == Pauli::I)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .axes
            .iter()
            .zip(&other.axes)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    pub fn action(&self) -> PauliAction {
        let n = self.axes.len();
        let mut xmask = 0;
        let mut zmask = 0;
        let mut ny = 0;
        for (q, p) in self.axes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => xmask |= bit,
                Pauli::Z => zmask |= bit,
                Pauli::Y => {
                    xmask |= bit;
                    zmask |= bit;
                    ny += 1;
                }
            }
        }
        PauliAction { xmask, zmask, ny }
    }

    /// Dense matrix on the full register.
    pub fn realize(&self) -> CMatrix {
        let d = 1usize << self.len();
        let act = self.action();
        let mut m = CMatrix::zeros(d, d);
        for x in 0..d {
            m[(x ^ act.xmask, x)] = act.phase(x);
        }
        m
    }

    /// Dense matrix restricted to the support qubits, first support qubit
    /// most significant.
    pub fn local_matrix(&self) -> CMatrix {
        self.support()
            .iter()
            .map(|&q| self.axes[q].matrix())
            .reduce(|a, b| linalg::kron(&a, &b))
            .unwrap_or_else(|| CMatrix::identity(1, 1))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s.trim().chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        PauliString::new(axes)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.axes {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// A Hermitian observable `Σ_μ h_μ σ_μ`, kept in canonical form: terms
/// sorted lexicographically by letters, duplicates merged exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    nqubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn zero(nqubits: usize) -> Self {
        PauliSum { nqubits, terms: Vec::new() }
    }

    pub fn from_terms(nqubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        if nqubits == 0 {
            return Err(Error::param("observable must act on at least one qubit"));
        }
        let mut raw = Vec::new();
        for (h, s) in terms {
            if s.len() != nqubits {
                return Err(Error::LengthMismatch { expected: nqubits, found: s.len() });
            }
            if !h.is_finite() {
                return Err(Error::param(format!("non-finite coefficient on {s}")));
            }
            raw.push((h, s));
        }
        raw.sort_by(|a, b| a.1.cmp(&b.1));
        let mut terms: Vec<(f64, PauliString)> = Vec::with_capacity(raw.len());
        for (h, s) in raw {
            match terms.last_mut() {
                Some((acc, last)) if *last == s => *acc += h,
                _ => terms.push((h, s)),
            }
        }
        terms.retain(|(h, _)| *h != 0.0);
        Ok(PauliSum { nqubits, terms })
    }

    pub fn single(coefficient: f64, string: PauliString) -> Self {
        let n = string.len();
        PauliSum::from_terms(n, [(coefficient, string)]).expect("single term is valid")
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every string contains only I and Z.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, s)| s.is_diagonal())
    }

    pub fn terms_commute(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, (_, a))| self.terms[i + 1..].iter().all(|(_, b)| a.commutes_with(b)))
    }

    /// Union of the supports of all terms, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.nqubits];
        for (_, s) in &self.terms {
            for q in s.support() {
                used[q] = true;
            }
        }
        (0..self.nqubits).filter(|&q| used[q]).collect()
    }

    pub fn scaled(&self, a: f64) -> PauliSum {
        PauliSum::from_terms(self.nqubits, self.terms.iter().map(|(h, s)| (a * h, s.clone())))
            .expect("scaling preserves validity")
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.nqubits != self.nqubits {
            return Err(Error::LengthMismatch { expected: self.nqubits, found: other.nqubits });
        }
        PauliSum::from_terms(self.nqubits, self.terms.iter().chain(&other.terms).cloned())
    }

    fn check_cap(&self, cap: usize) -> Result<()> {
        if self.nqubits > cap {
            return Err(Error::QubitCap { requested: self.nqubits, cap });
        }
        Ok(())
    }

    /// Dense `2^N × 2^N` matrix under the default qubit cap.
    pub fn realize(&self) -> Result<CMatrix> {
        self.realize_with_cap(DEFAULT_QUBIT_CAP)
    }

    pub fn realize_with_cap(&self, cap: usize) -> Result<CMatrix> {
        self.check_cap(cap)?;
        let d = 1usize << self.nqubits;
        let mut m = CMatrix::zeros(d, d);
        for (h, s) in &self.terms {
            let act = s.action();
            for x in 0..d {
                m[(x ^ act.xmask, x)] += act.phase(x) * *h;
            }
        }
        Ok(m)
    }

    /// Diagonal of an I/Z-only observable; `None` when some term is off-diagonal.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() || self.check_cap(DEFAULT_QUBIT_CAP).is_err() {
            return None;
        }
        let d = 1usize << self.nqubits;
        let mut diag = vec![0.0; d];
        for (h, s) in &self.terms {
            let zmask = s.action().zmask;
            for (x, v) in diag.iter_mut().enumerate() {
                *v += if (x & zmask).count_ones() % 2 == 1 { -h } else { *h };
            }
        }
        Some(diag)
    }

    /// Spectrum, ascending. Uses the diagonal fast path when possible.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        if let Some(mut diag) = self.diagonal() {
            diag.sort_by(f64::total_cmp);
            return Ok(diag);
        }
        Ok(linalg::eigvalsh(&self.realize()?))
    }

    /// Operator norm `‖H‖_∞`, the largest eigenvalue modulus.
    pub fn op_norm_inf(&self) -> Result<f64> {
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        let spec = self.spectrum()?;
        Ok(spec[0].abs().max(spec[spec.len() - 1].abs()))
    }

    /// Exact minimum eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        Ok(self.spectrum()?[0])
    }

    /// Parses the line format `<coefficient> <letters>`; blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<PauliSum> {
        let mut terms = Vec::new();
        let mut n = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(coef), Some(letters), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Config(format!("line {}: expected `<coefficient> <letters>`", lineno + 1)));
            };
            let h: f64 = coef
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad coefficient {coef:?}", lineno + 1)))?;
            let s: PauliString = letters.parse()?;
            match n {
                None => n = Some(s.len()),
                Some(len) if len != s.len() => {
                    return Err(Error::LengthMismatch { expected: len, found: s.len() })
                }
                _ => {}
            }
            terms.push((h, s));
        }
        let n = n.ok_or_else(|| Error::Config("observable has no terms".into()))?;
        PauliSum::from_terms(n, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|(h, s)| format!("{h:?} {s}\n")).collect()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn commutator_trace_matches_dense() {
        let d = 8;
        let b = CMatrix::from_fn(d, d, |r, c| C64::new((r * 3 + c) as f64 * 0.1, (r as f64 - c as f64) * 0.2));
        let m = CMatrix::from_fn(d, d, |r, c| C64::new((r * c) as f64 * 0.05 - 0.3, (r + 2 * c) as f64 * 0.07));
        for s in ["XYZ", "IYI", "ZZX", "III"] {
            let a = ps(s).action();
            let want = crate::linalg::trace_product(&b, &a.commutator(&m));
            assert!((a.commutator_trace(&b, &m) - want).norm() < 1e-12);
        }
    }

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

    #[test]
    fn zz_realizes_to_signed_diagonal() {
        let m = PauliSum::single(1.0, ps("ZZ")).realize().unwrap();
        let expected = [1.0, -1.0, -1.0, 1.0];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(m[(i, i)], C64::new(*e, 0.0));
        }
        assert!(max_abs(&(m.clone() - CMatrix::from_diagonal(&m.diagonal()))) == 0.0);
    }

    #[test]
    fn x_realizes_to_flip() {
        let m = PauliSum::single(1.0, ps("X")).realize().unwrap();
        assert_eq!(m, Pauli::X.matrix());
    }

    #[test]
    fn y_matches_textbook_matrix() {
        assert_eq!(ps("Y").realize(), Pauli::Y.matrix());
        let yz = ps("YZ").realize();
        let expected = linalg::kron(&Pauli::Y.matrix(), &Pauli::Z.matrix());
        assert!(max_abs(&(yz - expected)) < 1e-15);
    }

    #[test]
    fn ring_three_diagonal_by_enumeration() {
        // Oracle: enumerate bitstrings, spin s = 1 - 2b, sum s_l s_{l+1}.
        let n = 3;
        let expected: Vec<f64> = (0..8usize)
            .map(|x| {
                let s: Vec<f64> = (0..n).map(|q| if x >> (n - 1 - q) & 1 == 1 { -1.0 } else { 1.0 }).collect();
                (0..n).map(|l| s[l] * s[(l + 1) % n]).sum()
            })
            .collect();
        assert_eq!(expected, vec![3.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 3.0]);
        let m = ring(3).realize().unwrap();
        for (i, e) in expected.iter().enumerate() {
            assert!((m[(i, i)].re - e).abs() < 1e-15);
        }
        assert_eq!(ring(3).diagonal().unwrap(), expected);
    }

    #[test]
    fn norms_and_minimum() {
        assert_eq!(PauliSum::single(1.0, ps("Z")).op_norm_inf().unwrap(), 1.0);
        assert_eq!(ring(6).op_norm_inf().unwrap(), 6.0);
        assert_eq!(PauliSum::zero(3).op_norm_inf().unwrap(), 0.0);
        assert_eq!(ring(4).min_eigenvalue().unwrap(), -4.0);
        assert_eq!(ring(6).min_eigenvalue().unwrap(), -6.0);
        assert!((PauliSum::single(1.0, ps("X")).min_eigenvalue().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_path_agrees_with_diagonal_path() {
        let h = ring(4);
        let dense = linalg::eigvalsh(&h.realize().unwrap());
        assert_eq!(dense.len(), 16);
        assert!((dense[0] - h.min_eigenvalue().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_merges_duplicates() {
        let h = PauliSum::from_terms(2, [(1.0, ps("ZZ")), (0.5, ps("XI")), (2.0, ps("ZZ"))]).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[0], (0.5, ps("XI")));
        assert_eq!(h.terms()[1], (3.0, ps("ZZ")));
        let cancelled = PauliSum::from_terms(1, [(1.0, ps("Z")), (-1.0, ps("Z"))]).unwrap();
        assert!(cancelled.is_empty());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let err = PauliSum::from_terms(2, [(1.0, ps("ZZZ"))]).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
        assert!(matches!("ZQ".parse::<PauliString>(), Err(Error::InvalidPauli('Q'))));
    }

    #[test]
    fn cap_is_enforced() {
        let h = PauliSum::single(1.0, PauliString::identity(5));
        assert!(matches!(h.realize_with_cap(4), Err(Error::QubitCap { requested: 5, cap: 4 })));
    }

    #[test]
    fn text_round_trip() {
        let h = PauliSum::parse("# ring\n1.0 ZZIIII\n-0.25 XIIIIX\n\n").unwrap();
        assert_eq!(h.nqubits(), 6);
        assert_eq!(PauliSum::parse(&h.to_text()).unwrap(), h);
        assert!(PauliSum::parse("1.0 ZZ\n1.0 Z\n").is_err());
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        let s = ps("XYZ");
        let phi: f64 = 0.37;
        let sigma = s.realize();
        let u = CMatrix::identity(8, 8) * C64::new(phi.cos(), 0.0) - sigma * C64::new(0.0, phi.sin());
        let m = CMatrix::from_fn(8, 8, |r, c| C64::new((r * 3 + c) as f64 * 0.1, r as f64 - c as f64));
        let expected = &u * &m * u.adjoint();
        assert!(max_abs(&(s.action().rotate(&m, phi) - expected)) < 1e-12);
        assert!((s.action().trace_with(&m) - linalg::trace(&(&m * s.realize()))).norm() < 1e-12);
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0u8..4, n).prop_map(|v| {
            PauliString::new(
                v.into_iter()
                    .map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k as usize])
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn strings_square_to_identity(s in arb_string(3)) {
            let m = s.realize();
            let sq = &m * &m;
            prop_assert!(max_abs(&(sq - CMatrix::identity(8, 8))) < 1e-12);
            prop_assert!(linalg::hermiticity_defect(&m) < 1e-12);
        }

        #[test]
        fn realize_is_linear(
            a in -2.0f64..2.0, b in -2.0f64..2.0,
            s1 in arb_string(3), s2 in arb_string(3), s3 in arb_string(3),
        ) {
            let x = PauliSum::from_terms(3, [(0.7, s1), (-1.3, s2.clone())]).unwrap();
            let y = PauliSum::from_terms(3, [(0.4, s2), (1.1, s3)]).unwrap();
            let combo = x.scaled(a).add(&y.scaled(b)).unwrap();
            let lhs = combo.realize().unwrap();
            let rhs = x.realize().unwrap() * C64::new(a, 0.0) + y.realize().unwrap() * C64::new(b, 0.0);
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }

        #[test]
        fn norm_is_largest_eigenvalue_modulus(s1 in arb_string(2), s2 in arb_string(2), h in -3.0f64..3.0) {
            let sum = PauliSum::from_terms(2, [(h, s1), (1.0, s2)]).unwrap();
            let ev = linalg::eigvalsh(&sum.realize().unwrap());
            let expected = ev[0].abs().max(ev[3].abs());
            prop_assert!((sum.op_norm_inf().unwrap() - expected).abs() < 1e-10);
            prop_assert!(linalg::hermiticity_defect(&sum.realize().unwrap()) < 1e-12);
        }
    }
}
