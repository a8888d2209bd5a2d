//! Dense complex linear algebra helpers shared by the simulator.

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::CMatrix;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for r in 0..a.nrows() {
        for s in 0..a.ncols() {
            acc += a[(r, s)] * b[(s, r)];
        }
    }
    acc
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for s in r..n {
            worst = worst.max((m[(r, s)] - m[(s, r)].conj()).norm());
        }
    }
    worst
}

/// Replaces `m` by `(m + m†)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for r in 0..n {
        m[(r, r)] = C64::new(m[(r, r)].re, 0.0);
        for s in (r + 1)..n {
            let avg = (m[(r, s)] + m[(s, r)].conj()) * 0.5;
            m[(r, s)] = avg;
            m[(s, r)] = avg.conj();
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors in the matching columns.
///
/// Householder reduction comes from nalgebra; the tridiagonal stage is an
/// implicit QL sweep with hypot-based rotations, which stays finite on the
/// heavily graded spectra produced by Choi differences.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n <= 1 {
        let values = (0..n).map(|_| m[(0, 0)].re).collect();
        return (values, CMatrix::identity(n, n));
    }
    let (q, diag, off) = SymmetricTridiagonal::new(m.clone()).unpack();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z = DMatrix::<f64>::identity(n, n);
    tridiagonal_ql(&mut d, &mut e, Some(&mut z));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let zc = CMatrix::from_fn(n, n, |r, c| C64::new(z[(r, order[c])], 0.0));
    (values, q * zc)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n <= 1 {
        return (0..n).map(|_| m[(0, 0)].re).collect();
    }
    let (diag, off) = SymmetricTridiagonal::new(m.clone()).unpack_tridiagonal();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();
    tridiagonal_ql(&mut d, &mut e, None);
    d.sort_by(f64::total_cmp);
    d
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples rows
/// `i` and `i + 1`; `e[n - 1]` must be zero. Rotations accumulate into `z`.
pub(crate) fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DMatrix<f64>>) {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut shift_total = 0.0;
    let mut scale = 0.0f64;
    for l in 0..n {
        scale = scale.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * scale {
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                assert!(iterations < 200, "tridiagonal QL failed to converge");
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift_total += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let h = z[(k, i + 1)];
                            z[(k, i + 1)] = s * z[(k, i)] + c * h;
                            z[(k, i)] = c * z[(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * scale {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|x| x.abs()).sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `i[A, B]` is often needed; this returns the plain commutator `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Index layout of a k-qubit operator embedded in an n-qubit register.
///
/// `offsets[a]` is the register-index offset of local basis state `a`, whose
/// most significant bit belongs to `targets[0]`. `bases` lists every register
/// index with all target bits cleared.
#[derive(Debug, Clone)]
pub struct LocalLayout {
    pub offsets: Vec<usize>,
    pub bases: Vec<usize>,
}

impl LocalLayout {
    pub fn new(targets: &[usize], n: usize) -> Self {
        let k = targets.len();
        let mut mask = 0usize;
        let bits: Vec<usize> = targets
            .iter()
            .map(|&q| {
                let b = 1usize << (n - 1 - q);
                mask |= b;
                b
            })
            .collect();
        let offsets = (0..1usize << k)
            .map(|a| {
                (0..k)
                    .filter(|&j| a >> (k - 1 - j) & 1 == 1)
                    .map(|j| bits[j])
                    .sum()
            })
            .collect();
        let bases = (0..1usize << n).filter(|i| i & mask == 0).collect();
        LocalLayout { offsets, bases }
    }
}

/// Local superoperator `vec(E(X)) = S vec(X)` (row-major `vec`) of a
/// channel on a few qubits, with exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSuperop {
    kd: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl LocalSuperop {
    /// `S[(a,b),(c,e)] = Σ_k K[a,c] conj(K[b,e])`.
    pub fn from_kraus(ops: &[CMatrix]) -> Self {
        let kd = ops[0].nrows();
        let mut entries = Vec::new();
        for a in 0..kd {
            for b in 0..kd {
                for c in 0..kd {
                    for e in 0..kd {
                        let v = ops.iter().fold(ZERO, |acc, k| acc + k[(a, c)] * k[(b, e)].conj());
                        if v != ZERO {
                            entries.push((a * kd + b, c * kd + e, v));
                        }
                    }
                }
            }
        }
        LocalSuperop { kd, entries }
    }

    /// Superoperator of the Heisenberg-picture adjoint map.
    pub fn adjoint(&self) -> Self {
        LocalSuperop { kd: self.kd, entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect() }
    }

    /// Applies the map to every local block of a square register operator.
    pub fn apply(&self, m: &CMatrix, layout: &LocalLayout) -> CMatrix {
        let kd = self.kd;
        debug_assert_eq!(layout.offsets.len(), kd);
        let n = m.nrows();
        let mut out = CMatrix::zeros(n, n);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        let off = &layout.offsets;
        let mut x = vec![ZERO; kd * kd];
        let mut y = vec![ZERO; kd * kd];
        for &cb in &layout.bases {
            for &rb in &layout.bases {
                for a in 0..kd {
                    for b in 0..kd {
                        x[a * kd + b] = src[(cb + off[b]) * n + rb + off[a]];
                    }
                }
                y.iter_mut().for_each(|v| *v = ZERO);
                for &(r, c, v) in &self.entries {
                    y[r] += v * x[c];
                }
                for a in 0..kd {
                    for b in 0..kd {
                        dst[(cb + off[b]) * n + rb + off[a]] = y[a * kd + b];
                    }
                }
            }
        }
        out
    }
}

fn row_major(op: &CMatrix) -> Vec<C64> {
    let k = op.nrows();
    let mut out = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            out.push(op[(a, b)]);
        }
    }
    out
}

/// `m <- op · m`, with `op` acting on `targets` of an n-qubit register.
/// `m` may be a square register matrix or a column vector.
pub fn apply_left(m: &mut CMatrix, op: &CMatrix, layout: &LocalLayout) {
    let k = layout.offsets.len();
    debug_assert_eq!(op.nrows(), k);
    let op = row_major(op);
    let nrows = m.nrows();
    let mut buf = vec![ZERO; k];
    let data = m.as_mut_slice();
    for col in data.chunks_mut(nrows) {
        for &base in &layout.bases {
            for (a, slot) in buf.iter_mut().enumerate() {
                *slot = col[base + layout.offsets[a]];
            }
            for a in 0..k {
                let row = &op[a * k..(a + 1) * k];
                let acc = row.iter().zip(&buf).fold(ZERO, |acc, (x, y)| acc + x * y);
                col[base + layout.offsets[a]] = acc;
            }
        }
    }
}

/// `m <- m · op†`, with `op` acting on `targets` of an n-qubit register.
pub fn apply_right_adjoint(m: &mut CMatrix, op: &CMatrix, layout: &LocalLayout) {
    let k = layout.offsets.len();
    debug_assert_eq!(op.nrows(), k);
    let op = row_major(op);
    let nrows = m.nrows();
    let mut buf = vec![ZERO; k];
    let data = m.as_mut_slice();
    for &base in &layout.bases {
        for r in 0..nrows {
            for (b, slot) in buf.iter_mut().enumerate() {
                *slot = data[r + (base + layout.offsets[b]) * nrows];
            }
            for a in 0..k {
                let row = &op[a * k..(a + 1) * k];
                let acc = row
                    .iter()
                    .zip(&buf)
                    .fold(ZERO, |acc, (x, y)| acc + y * x.conj());
                data[r + (base + layout.offsets[a]) * nrows] = acc;
            }
        }
    }
}
