//! Small dense Hermitian matrices and their (generalized) spectra.
//!
//! Dimensions are capped at [`MAX_DIM`]; everything here is sized for the
//! per-grid-point work of the solver, where `n` is the complex dimension of
//! the torus.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::algebra::EigenTuple;
use crate::error::{Error, Result};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Largest complex dimension handled by the kernel.
pub const MAX_DIM: usize = 8;

const HERMITIAN_TOL: f64 = 1e-12;
const METRIC_FLOOR: f64 = 1e-10;

/// A dense `n × n` Hermitian matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries, rejecting inputs whose
    /// anti-Hermitian part exceeds `1e-12` relative to the largest entry, and
    /// symmetrizing what remains.
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != n * n {
            return Err(Error::Dimension(alloc::format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = (entries[i * n + j] - entries[j * n + i].conj()).norm();
                dev = dev.max(d);
            }
        }
        let rel = if scale > 0.0 { dev / scale } else { 0.0 };
        if rel > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: rel });
        }
        let mut m = HermitianMatrix { n, entries };
        m.symmetrize();
        Ok(m)
    }

    /// Real symmetric matrix from row-major real entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_entries(n, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Diagonal matrix.
    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        check_dim(n)?;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, &v) in values.iter().enumerate() {
            entries[i * n + i] = Complex64::new(v, 0.0);
        }
        Self::from_entries(n, entries)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::diag(&vec![0.0; n])
    }

    /// Wraps entries already known to be Hermitian (symmetrized, unchecked).
    pub(crate) fn from_raw(n: usize, entries: Vec<Complex64>) -> Self {
        let mut m = HermitianMatrix { n, entries };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.entries[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self.entries[i * n + j] + self.entries[j * n + i].conj()) * 0.5;
                self.entries[i * n + j] = avg;
                self.entries[j * n + i] = avg.conj();
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i * self.n + i].re).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        HermitianMatrix { n: self.n, entries }
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix { n: self.n, entries: self.entries.iter().map(|a| a * s).collect() }
    }

    /// Joint congruence `P* A P`.
    pub fn congruence(&self, p: &[Complex64]) -> Self {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        congruence_into(&self.entries, p, n, &mut out);
        Self::from_raw(n, out)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut work = self.entries.clone();
        let mut vals = vec![0.0; self.n];
        jacobi_eigh(&mut work, self.n, None, &mut vals);
        vals
    }

    /// Eigenvalues (descending) and the unitary matrix of eigenvectors stored
    /// column-wise, row-major.
    pub fn eigh(&self) -> (Vec<f64>, Vec<Complex64>) {
        let mut work = self.entries.clone();
        let mut vals = vec![0.0; self.n];
        let mut vecs = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        jacobi_eigh(&mut work, self.n, Some(&mut vecs), &mut vals);
        (vals, vecs)
    }

    /// Determinant (real for Hermitian input), via the spectrum.
    pub fn det(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    /// Inverse square root `A^{-1/2}` of a positive definite matrix.
    pub fn inv_sqrt(&self) -> Result<Vec<Complex64>> {
        let (vals, vecs) = self.eigh();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= METRIC_FLOOR {
            return Err(Error::SingularMetric { min_eigenvalue: min, point: None });
        }
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += vecs[i * n + k] * vecs[j * n + k].conj() / vals[k].sqrt();
                }
                out[i * n + j] = acc;
            }
        }
        Ok(out)
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse_pd(&self) -> Result<Self> {
        let (vals, vecs) = self.eigh();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= METRIC_FLOOR {
            return Err(Error::SingularMetric { min_eigenvalue: min, point: None });
        }
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += vecs[i * n + k] * vecs[j * n + k].conj() / vals[k];
                }
                out[i * n + j] = acc;
            }
        }
        Ok(Self::from_raw(n, out))
    }

    /// Sum of all `k × k` principal minors, by direct enumeration of index
    /// subsets and complex LU determinants.
    pub fn elem_sym_minors(&self, k: usize) -> Result<f64> {
        let n = self.n;
        if k > n {
            return Err(Error::DegreeOutOfRange { k, n });
        }
        if k == 0 {
            return Ok(1.0);
        }
        let mut total = 0.0;
        let mut idx: Vec<usize> = (0..k).collect();
        let mut sub = vec![Complex64::new(0.0, 0.0); k * k];
        loop {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    sub[a * k + b] = self.entries[i * n + j];
                }
            }
            total += complex_det(&mut sub, k).re;
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        Ok(total)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(alloc::format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Advances `idx` to the next increasing `k`-subset of `0..n`.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Determinant by Gaussian elimination with partial pivoting (destroys `a`).
fn complex_det(a: &mut [Complex64], n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in (col + 1)..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in (col + 1)..n {
            let factor = a[r * n + col] / d;
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= factor * v;
            }
        }
    }
    det
}

/// `out = P* A P` for row-major `n × n` operands.
pub(crate) fn congruence_into(a: &[Complex64], p: &[Complex64], n: usize, out: &mut [Complex64]) {
    let mut tmp = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += a[i * n + k] * p[k * n + j];
            }
            tmp[i * n + j] = acc;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += p[k * n + i].conj() * tmp[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
}

/// Cyclic complex Jacobi eigensolver for a Hermitian matrix held in `a`
/// (overwritten). Eigenvalues are written to `vals` in descending order and,
/// when requested, the matching eigenvectors to the columns of `vecs`.
pub(crate) fn jacobi_eigh(
    a: &mut [Complex64],
    n: usize,
    mut vecs: Option<&mut [Complex64]>,
    vals: &mut [f64],
) {
    if let Some(v) = vecs.as_deref_mut() {
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
        }
    }
    for sweep in 0..64 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i].re * a[i * n + i].re;
            for j in (i + 1)..n {
                off += a[i * n + j].norm_sqr();
            }
        }
        if off == 0.0 || off <= 1e-32 * diag || (sweep > 0 && off < f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Rotate the phase of column/row q so that a_pq becomes real.
                let phase = apq / r;
                for k in 0..n {
                    a[k * n + q] *= phase.conj();
                }
                for k in 0..n {
                    a[q * n + k] *= phase;
                }
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        v[k * n + q] *= phase.conj();
                    }
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * s;
                    a[k * n + q] = akp * s + akq * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * s;
                    a[q * n + k] = apk * s + aqk * c;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * s;
                        v[k * n + q] = vkp * s + vkq * c;
                    }
                }
            }
        }
    }
    for i in 0..n {
        vals[i] = a[i * n + i].re;
    }
    // selection sort, descending, permuting eigenvector columns alongside
    for i in 0..n {
        let mut best = i;
        for j in (i + 1)..n {
            if vals[j] > vals[best] {
                best = j;
            }
        }
        if best != i {
            vals.swap(i, best);
            if let Some(v) = vecs.as_deref_mut() {
                for k in 0..n {
                    v.swap(k * n + i, k * n + best);
                }
            }
        }
    }
}

/// Eigenvalues of `G^{-1/2} A G^{-1/2}`, descending.
///
/// The pencil is reduced by the symmetric square-root congruence so the
/// reduced matrix stays Hermitian and the spectrum real under roundoff.
pub fn generalized_eigenvalues(a: &HermitianMatrix, g: &HermitianMatrix) -> Result<EigenTuple> {
    if a.dim() != g.dim() {
        return Err(Error::Dimension("pencil operands differ in size".into()));
    }
    let w = g.inv_sqrt()?;
    let reduced = a.congruence(&w);
    EigenTuple::new(reduced.eigenvalues())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_hermitian() {
        let e = HermitianMatrix::from_entries(2, vec![c(1.0, 0.0), c(1.0, 1.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(e, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn jacobi_on_complex_2x2() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let m = HermitianMatrix::from_entries(2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)])
            .unwrap();
        let (vals, vecs) = m.eigh();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        // A v = λ v for each column
        for k in 0..2 {
            for i in 0..2 {
                let av: Complex64 = (0..2).map(|j| m.get(i, j) * vecs[j * 2 + k]).sum();
                assert!((av - vecs[i * 2 + k] * vals[k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn pencil_diagonal_example() {
        let a = HermitianMatrix::diag(&[2.0, 6.0]).unwrap();
        let g = HermitianMatrix::diag(&[1.0, 2.0]).unwrap();
        let l = generalized_eigenvalues(&a, &g).unwrap();
        assert!((l[0] - 3.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pencil_identity_case() {
        let g = HermitianMatrix::from_entries(
            3,
            vec![c(2.0, 0.0), c(0.3, 0.1), c(0.0, 0.0), c(0.3, -0.1), c(1.5, 0.0), c(0.2, 0.0), c(0.0, 0.0), c(0.2, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let l = generalized_eigenvalues(&g, &g).unwrap();
        for v in l.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_metric_rejected() {
        let a = HermitianMatrix::identity(2).unwrap();
        let g = HermitianMatrix::diag(&[1.0, 0.0]).unwrap();
        assert!(matches!(generalized_eigenvalues(&a, &g), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn minors_of_diagonal_and_identity() {
        let d = HermitianMatrix::diag(&[1.0, 2.0, 3.0]).unwrap();
        assert!((d.elem_sym_minors(2).unwrap() - 11.0).abs() < 1e-14);
        let i3 = HermitianMatrix::identity(3).unwrap();
        assert!((i3.elem_sym_minors(3).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(d.elem_sym_minors(4), Err(Error::DegreeOutOfRange { .. })));
    }
}
