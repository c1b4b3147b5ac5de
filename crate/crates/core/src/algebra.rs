//! Elementary symmetric polynomials, the cones `Γ^m`, their derivatives, and
//! the classical inequalities (Maclaurin, Gårding, concavity of `S_m^{1/m}`).
//!
//! All functions act on eigenvalue tuples `λ ∈ ℝⁿ`. `S_k` is evaluated by
//! building the coefficients of `∏(1 + λ_i x)` one factor at a time, which is
//! `O(nk)` and avoids the cancellation of subset enumeration.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::hermitian::MAX_DIM;
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Generalized eigenvalues at a grid point; the argument of every `S_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    /// Validates `2 ≤ n ≤ 8` and finiteness.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.len() > MAX_DIM {
            return Err(Error::Dimension(alloc::format!(
                "eigen tuple length {} outside 2..={MAX_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite eigenvalue".into()));
        }
        Ok(EigenTuple(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EigenTuple {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Degree and slack defining a (shrunken) cone `Γ^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub n: usize,
    pub m: usize,
    /// Membership requires `S_k > margin · C(n,k)` for `k = 1..=m`.
    pub margin: f64,
}

impl ConeSpec {
    pub fn new(n: usize, m: usize, margin: f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM || m == 0 || m > n {
            return Err(Error::Dimension(alloc::format!("need 1 ≤ m ≤ n ≤ {MAX_DIM}, got n={n}, m={m}")));
        }
        if !(margin >= 0.0) {
            return Err(Error::Domain("cone margin must be nonnegative".into()));
        }
        Ok(ConeSpec { n, m, margin })
    }
}

/// Binomial coefficient as a float.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// All of `S_0, …, S_kmax` in one pass.
pub fn elem_sym_all(lambda: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    elem_sym_into(lambda, &mut e);
    e
}

/// Fills `out[k] = S_k(λ)` for `k < out.len()`.
pub(crate) fn elem_sym_into(lambda: &[f64], out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = 0.0;
    }
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    let kmax = out.len() - 1;
    for (i, &l) in lambda.iter().enumerate() {
        let top = (i + 1).min(kmax);
        for k in (1..=top).rev() {
            out[k] += l * out[k - 1];
        }
    }
}

fn sym_single(lambda: &[f64], k: usize) -> f64 {
    let mut buf = [0.0; MAX_DIM + 1];
    elem_sym_into(lambda, &mut buf[..=k]);
    buf[k]
}

/// `S_k(λ)`, with `S_0 = 1`.
pub fn elem_sym(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return Err(Error::DegreeOutOfRange { k, n });
    }
    Ok(sym_single(lambda, k))
}

/// `(is_member, worst_margin)` with `worst_margin = min_k S_k / C(n,k)`.
pub fn cone_membership(lambda: &[f64], spec: &ConeSpec) -> (bool, f64) {
    let n = lambda.len();
    let mut s = [0.0; MAX_DIM + 1];
    let m = spec.m.min(n);
    elem_sym_into(lambda, &mut s[..=m]);
    let mut member = true;
    let mut worst = f64::INFINITY;
    for k in 1..=m {
        let c = binom(n, k);
        if !(s[k] > spec.margin * c) {
            member = false;
        }
        worst = worst.min(s[k] / c);
    }
    (member, worst)
}

/// Worst normalized margin `min_{k ≤ m} S_k / C(n,k)`.
pub fn worst_margin(lambda: &[f64], m: usize) -> f64 {
    let n = lambda.len();
    let mut s = [0.0; MAX_DIM + 1];
    let m = m.min(n);
    elem_sym_into(lambda, &mut s[..=m]);
    (1..=m).map(|k| s[k] / binom(n, k)).fold(f64::INFINITY, f64::min)
}

/// Membership in the closed cone: `S_k ≥ -tol` for all `k ≤ m`.
pub fn in_closed_cone(lambda: &[f64], m: usize, tol: f64) -> bool {
    worst_margin(lambda, m) >= -tol
}

/// `S_{k}` of `λ` with the listed entries replaced by zero.
fn sym_with_zeroed(lambda: &[f64], k: usize, zeroed: &[usize]) -> f64 {
    let mut buf = [0.0; MAX_DIM];
    let n = lambda.len();
    buf[..n].copy_from_slice(lambda);
    for &z in zeroed {
        buf[z] = 0.0;
    }
    sym_single(&buf[..n], k)
}

/// Gradient `(S_{m-1;i}(λ))_i = ∂S_m/∂λ_i`.
pub fn grad_elem_sym(lambda: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = lambda.len();
    if m == 0 || m > n {
        return Err(Error::DegreeOutOfRange { k: m, n });
    }
    Ok((0..n).map(|i| sym_with_zeroed(lambda, m - 1, &[i])).collect())
}

pub(crate) fn grad_elem_sym_into(lambda: &[f64], m: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate().take(lambda.len()) {
        *o = sym_with_zeroed(lambda, m - 1, &[i]);
    }
}

/// Eigenvalue-space Hessian of `S_m`: `S_{m-2;ij}` off the diagonal, zero on it.
/// Row-major `n × n`.
pub fn hess_elem_sym(lambda: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = lambda.len();
    if m < 2 || m > n {
        return Err(Error::DegreeOutOfRange { k: m, n });
    }
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sym_with_zeroed(lambda, m - 2, &[i, j]);
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
    }
    Ok(h)
}

fn require_closed_cone(lambda: &[f64], m: usize, what: &str) -> Result<()> {
    let n = lambda.len();
    if m == 0 || m > n {
        return Err(Error::DegreeOutOfRange { k: m, n });
    }
    let w = worst_margin(lambda, m);
    if w < 0.0 {
        return Err(Error::Domain(alloc::format!("{what} outside the closed cone Γ^{m} (worst margin {w:e})")));
    }
    Ok(())
}

/// Smallest Maclaurin gap `min_{j < i ≤ m} (S_j/C_j)^{1/j} − (S_i/C_i)^{1/i}`.
pub fn check_maclaurin(lambda: &[f64], m: usize) -> Result<f64> {
    require_closed_cone(lambda, m, "tuple")?;
    let n = lambda.len();
    let s = elem_sym_all(lambda, m);
    let means: Vec<f64> = (1..=m).map(|k| (s[k] / binom(n, k)).powf(1.0 / k as f64)).collect();
    if m == 1 {
        return Ok(0.0);
    }
    let mut gap = f64::INFINITY;
    for j in 0..m {
        for i in j + 1..m {
            gap = gap.min(means[j] - means[i]);
        }
    }
    Ok(gap)
}

/// Gårding gap `Σ η_i S_{m-1;i}(λ) − m S_m(η)^{1/m} S_m(λ)^{(m-1)/m}`.
pub fn check_garding(lambda: &[f64], eta: &[f64], m: usize) -> Result<f64> {
    if lambda.len() != eta.len() {
        return Err(Error::Dimension("tuples differ in length".into()));
    }
    require_closed_cone(lambda, m, "λ")?;
    require_closed_cone(eta, m, "η")?;
    let grad = grad_elem_sym(lambda, m)?;
    let pairing: f64 = eta.iter().zip(&grad).map(|(e, g)| e * g).sum();
    let sm_eta = sym_single(eta, m).max(0.0);
    let sm_lam = sym_single(lambda, m).max(0.0);
    let mf = m as f64;
    let rhs = if sm_eta == 0.0 || sm_lam == 0.0 {
        0.0
    } else {
        mf * sm_eta.powf(1.0 / mf) * sm_lam.powf((mf - 1.0) / mf)
    };
    Ok(pairing - rhs)
}

/// `F(λ) = (S_m(λ)/C(n,m))^{1/m}`, normalized so that `F(1,…,1) = 1`.
pub fn hessian_operator(lambda: &[f64], m: usize) -> Result<f64> {
    let n = lambda.len();
    if m == 0 || m > n {
        return Err(Error::DegreeOutOfRange { k: m, n });
    }
    let sm = sym_single(lambda, m);
    if sm < 0.0 {
        return Err(Error::Domain(alloc::format!("S_{m} = {sm:e} is negative")));
    }
    Ok((sm / binom(n, m)).powf(1.0 / m as f64))
}
