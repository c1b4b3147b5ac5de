//! Newton/continuation solver for `S_m(λ(X)) = C(n,m) e^{m(f+b)}`, with
//! `X = χ + χ̃ + tω + i∂∂̄φ`, in log-residual form.

mod continuation;
mod newton;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::algebra::{binom, elem_sym, elem_sym_into, grad_elem_sym_into};
use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{complex_hessian_at, eigen_field, integrate, HermitianField, ScalarField, TorusGrid};
use crate::hermitian::{congruence_into, jacobi_eigh, MAX_DIM};
use crate::sum::pairwise_sum_by;

pub use continuation::{
    continuation_degenerate, decreasing_sequence, median, uniformity_holds, BracketRecord, ContinuationOutcome,
    ContinuationSchedule, DecreasingCertificate, BRACKET_SLACK,
};
pub use newton::{newton_step, solve_nondegenerate, solve_with_initial, StepDiagnostics};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Newton solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub m: usize,
    /// Regularization parameter `t ∈ (0, 1]`.
    pub t: f64,
    /// Target for `sup |residual|`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Pointwise worst margin every accepted iterate keeps.
    pub cone_margin: f64,
    /// Initial step factor of the line search.
    pub damping: f64,
    /// Upper cap of the inexact-Newton forcing term.
    pub forcing_cap: f64,
    pub linear_max_iter: usize,
    pub linear_restart: usize,
}

impl SolverConfig {
    pub fn new(m: usize, t: f64) -> Self {
        SolverConfig {
            m,
            t,
            newton_tol: 1e-9,
            max_newton: 60,
            cone_margin: 1e-8,
            damping: 1.0,
            forcing_cap: 1e-2,
            linear_max_iter: 300,
            linear_restart: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("degree m must be positive".into()));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::Config(alloc::format!("t must lie in (0, 1], got {}", self.t)));
        }
        let positive = [
            ("newton_tol", self.newton_tol),
            ("cone_margin", self.cone_margin),
            ("damping", self.damping),
            ("forcing_cap", self.forcing_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(alloc::format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.damping > 1.0 {
            return Err(Error::Config("damping must not exceed 1".into()));
        }
        if self.max_newton == 0 || self.linear_max_iter == 0 || self.linear_restart == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Current iterate and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Potential normalized to `max φ = 0`.
    pub phi: ScalarField,
    pub b: f64,
    pub residual_sup: f64,
    pub cone_margin_min: f64,
    pub newton_iters: usize,
}

/// Wall-clock source; the kernel itself never reads time.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// One solve (or one continuation stage).
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub t: f64,
    /// Solver constant `b` at convergence.
    pub b: f64,
    /// Compatibility constant `b_t` from the integrals.
    pub b_compat: f64,
    pub residual_history: Vec<f64>,
    pub sup_phi: f64,
    pub inf_phi: f64,
    pub margin_min: f64,
    pub iters: usize,
    pub seconds: f64,
    /// Mollification width applied to `f` at this stage.
    pub sigma: f64,
    /// Constant added to `f` at this stage (continuation normalizes
    /// `C(n,m)∫e^{mf} = ∫S_m(χ+χ̃)`).
    pub f_shift: f64,
    /// True when the warm start failed and the stage restarted from `φ = 0`.
    pub restarted: bool,
    /// `sup(φ_t − φ_{t_prev})`, absent at the first stage.
    pub sup_increment: Option<f64>,
}

/// Report of a single solve or a continuation run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub stages: Vec<StageRecord>,
    pub brackets: Vec<BracketRecord>,
    /// `max_t ‖φ_t‖_∞ ≤ 3 median_t ‖φ_t‖_∞`.
    pub uniform_sup_bound: Option<bool>,
    pub certificate: Option<DecreasingCertificate>,
    pub failure: Option<String>,
}

/// Subtracts the grid maximum.
pub fn normalize_sup(phi: &ScalarField) -> ScalarField {
    let top = phi.max();
    phi.map(|v| v - top)
}

/// `log ∫ g dV` for `g = e^{m f}`, computed with a max shift.
pub(crate) fn log_integral_exp(f: &ScalarField, m: f64, volume: &ScalarField) -> f64 {
    let top = f.max() * m;
    let fv = f.values();
    let vv = volume.values();
    let s = pairwise_sum_by(fv.len(), &|p| (m * fv[p] - top).exp() * vv[p]);
    top + (s * f.grid().cell_volume()).ln()
}

/// `∫ S_m(λ(A)) dV` with eigenvalues relative to `ω`.
pub fn integral_sm(a: &HermitianField, bg: &BackgroundData, m: usize) -> Result<f64> {
    let eig = eigen_field(a, &bg.omega)?;
    let vals: Vec<f64> = (0..a.grid().len()).map(|p| elem_sym(eig.at(p), m)).collect::<Result<_>>()?;
    Ok(integrate(&ScalarField::new(*a.grid(), vals)?, bg.volume()))
}

/// `b` with `e^{mb} = ∫S_m(λ(χ+χ̃+tω)) dV / (C(n,m) ∫e^{mf} dV)`.
pub fn compatibility_constant(bg: &BackgroundData, t: f64, f: &ScalarField, m: usize) -> Result<f64> {
    let grid = bg.grid();
    if *f.grid() != *grid {
        return Err(Error::Dimension("f and background live on different grids".into()));
    }
    let n = grid.dim();
    if m == 0 || m > n {
        return Err(Error::Config(alloc::format!("degree m={m} outside 1..={n}")));
    }
    let num = integral_sm(&bg.base_form(t), bg, m)?;
    if !(num > 0.0) {
        return Err(Error::Config(alloc::format!(
            "∫S_m(χ+χ̃+tω) dV = {num:e} is not positive; no compatibility constant exists"
        )));
    }
    let log_den = binom(n, m).ln() + log_integral_exp(f, m as f64, bg.volume());
    Ok((num.ln() - log_den) / m as f64)
}

/// Pointwise log-residual `log S_m(λ(X)) − log C(n,m) − m(f + b)`.
pub fn residual(
    phi: &ScalarField,
    b: f64,
    bg: &BackgroundData,
    t: f64,
    f: &ScalarField,
    m: usize,
) -> Result<ScalarField> {
    let problem = Problem::new(bg, t, f, m)?;
    let ev = problem.evaluate(phi.values(), b, false)?;
    ScalarField::new(*phi.grid(), ev.residual)
}

/// Applies the linearization `v ↦ Re tr(a · i∂∂̄v)` of the log-residual at
/// `φ`, where `a = ∂ log S_m / ∂X`.
pub fn linearization(
    phi: &ScalarField,
    bg: &BackgroundData,
    t: f64,
    f: &ScalarField,
    m: usize,
    v: &ScalarField,
) -> Result<ScalarField> {
    let problem = Problem::new(bg, t, f, m)?;
    let ev = problem.evaluate(phi.values(), 0.0, true)?;
    let mut out = vec![0.0; phi.grid().len()];
    problem.apply_jacobian(&ev.coeff, v.values(), &mut out);
    ScalarField::new(*phi.grid(), out)
}

/// Pointwise coefficient matrix `a = ∂ log S_m / ∂X` at `φ` (for ellipticity
/// checks).
pub fn coefficient_field(
    phi: &ScalarField,
    bg: &BackgroundData,
    t: f64,
    f: &ScalarField,
    m: usize,
) -> Result<HermitianField> {
    let problem = Problem::new(bg, t, f, m)?;
    let ev = problem.evaluate(phi.values(), 0.0, true)?;
    HermitianField::pointwise(*phi.grid(), ev.coeff)
}

/// `ω^{-1/2}`, constant or per point.
#[derive(Debug, Clone)]
enum MetricRoot {
    Constant(Vec<Complex64>),
    Pointwise(Vec<Complex64>),
}

impl MetricRoot {
    fn at(&self, p: usize, nn: usize) -> &[Complex64] {
        match self {
            MetricRoot::Constant(w) => w,
            MetricRoot::Pointwise(w) => &w[p * nn..(p + 1) * nn],
        }
    }
}

/// Pointwise data of the equation at fixed `(t, f, m)`.
pub(crate) struct Problem<'a> {
    pub(crate) bg: &'a BackgroundData,
    pub(crate) f: &'a ScalarField,
    pub(crate) m: usize,
    base: HermitianField,
    root: MetricRoot,
    log_binom: f64,
}

/// Residual, coefficients and worst margin at one iterate.
pub(crate) struct Evaluation {
    pub(crate) residual: Vec<f64>,
    pub(crate) coeff: Vec<Complex64>,
    pub(crate) margin_min: f64,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(bg: &'a BackgroundData, t: f64, f: &'a ScalarField, m: usize) -> Result<Self> {
        let grid = *bg.grid();
        if *f.grid() != grid {
            return Err(Error::Dimension("f and background live on different grids".into()));
        }
        let n = grid.dim();
        if m == 0 || m > n {
            return Err(Error::Config(alloc::format!("degree m={m} outside 1..={n}")));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Config(alloc::format!("t must be finite and nonnegative, got {t}")));
        }
        let root = match bg.omega.as_constant() {
            Some(w) => MetricRoot::Constant(w.inv_sqrt()?),
            None => {
                let mut all = Vec::with_capacity(grid.len() * n * n);
                for p in 0..grid.len() {
                    all.extend(bg.omega.matrix_at(p).inv_sqrt()?);
                }
                MetricRoot::Pointwise(all)
            }
        };
        Ok(Problem { bg, f, m, base: bg.base_form(t), root, log_binom: binom(n, m).ln() })
    }

    pub(crate) fn grid(&self) -> &TorusGrid {
        self.bg.grid()
    }

    /// Reduced matrix `W X W` at point `p`.
    fn reduced_at(&self, phi: &[f64], p: usize, x: &mut [Complex64], out: &mut [Complex64]) {
        let grid = self.grid();
        let n = grid.dim();
        let nn = n * n;
        complex_hessian_at(phi, grid, p, x);
        for (xi, bi) in x.iter_mut().zip(self.base.at(p)) {
            *xi += bi;
        }
        congruence_into(x, self.root.at(p, nn), n, out);
    }

    fn margin_of(&self, lam: &[f64], s: &mut [f64; MAX_DIM + 1]) -> f64 {
        let n = lam.len();
        elem_sym_into(lam, &mut s[..=self.m]);
        (1..=self.m).map(|k| s[k] / binom(n, k)).fold(f64::INFINITY, f64::min)
    }

    /// Residual and, optionally, coefficients `a = W U diag(S_{m−1;i}/S_m) U* W`.
    pub(crate) fn evaluate(&self, phi: &[f64], b: f64, with_coeff: bool) -> Result<Evaluation> {
        let grid = self.grid();
        let n = grid.dim();
        let nn = n * n;
        let m = self.m;
        let mf = m as f64;
        let fv = self.f.values();
        let mut residual = vec![0.0; grid.len()];
        let mut coeff = if with_coeff { vec![Complex64::new(0.0, 0.0); grid.len() * nn] } else { Vec::new() };
        let mut x = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        let mut red = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        let mut vecs = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        let mut lam = [0.0; MAX_DIM];
        let mut s = [0.0; MAX_DIM + 1];
        let mut grad = [0.0; MAX_DIM];
        let mut margin_min = f64::INFINITY;
        for p in 0..grid.len() {
            self.reduced_at(phi, p, &mut x[..nn], &mut red[..nn]);
            if with_coeff {
                jacobi_eigh(&mut red[..nn], n, Some(&mut vecs[..nn]), &mut lam[..n]);
            } else {
                jacobi_eigh(&mut red[..nn], n, None, &mut lam[..n]);
            }
            let w = self.margin_of(&lam[..n], &mut s);
            if !(w > 0.0) {
                return Err(Error::OutsideCone { worst_margin: w, point: Some(p) });
            }
            margin_min = margin_min.min(w);
            let sm = s[m];
            residual[p] = sm.ln() - self.log_binom - mf * (fv[p] + b);
            if with_coeff {
                grad_elem_sym_into(&lam[..n], m, &mut grad[..n]);
                // V = W U, a = V diag(g) V*
                let w_root = self.root.at(p, nn);
                let mut v = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            acc += w_root[i * n + k] * vecs[k * n + j];
                        }
                        v[i * n + j] = acc;
                    }
                }
                let a = &mut coeff[p * nn..(p + 1) * nn];
                for i in 0..n {
                    for j in i..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            acc += v[i * n + k] * (grad[k] / sm) * v[j * n + k].conj();
                        }
                        if i == j {
                            a[i * n + i] = Complex64::new(acc.re, 0.0);
                        } else {
                            a[i * n + j] = acc;
                            a[j * n + i] = acc.conj();
                        }
                    }
                }
            }
        }
        Ok(Evaluation { residual, coeff, margin_min })
    }

    /// `out = Re tr(a · i∂∂̄v)` pointwise.
    pub(crate) fn apply_jacobian(&self, coeff: &[Complex64], v: &[f64], out: &mut [f64]) {
        let grid = self.grid();
        let n = grid.dim();
        let nn = n * n;
        let mut h = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        for (p, o) in out.iter_mut().enumerate() {
            complex_hessian_at(v, grid, p, &mut h[..nn]);
            let a = &coeff[p * nn..(p + 1) * nn];
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += (a[j * n + i] * h[i * n + j]).re;
                }
            }
            *o = acc;
        }
    }

    /// Volume-weighted mean `∫ g dV / ∫ dV`.
    pub(crate) fn volume_mean(&self, g: &[f64]) -> f64 {
        let vv = self.bg.volume().values();
        let num = pairwise_sum_by(g.len(), &|p| g[p] * vv[p]);
        let den = pairwise_sum_by(g.len(), &|p| vv[p]);
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianMatrix;

    #[test]
    fn constant_case_compatibility() {
        let grid = TorusGrid::new(2, 4, 1.0).unwrap();
        let id = HermitianMatrix::identity(2).unwrap();
        let bg = BackgroundData::constant(grid, id.clone(), HermitianMatrix::zeros(2).unwrap(), id, 1.0, 2).unwrap();
        let f = ScalarField::zeros(grid);
        let b = compatibility_constant(&bg, 0.3, &f, 2).unwrap();
        assert!((b - 1.3f64.ln()).abs() < 1e-14);
        let b0 = compatibility_constant(&bg, 0.0, &f, 2).unwrap();
        assert!(b0.abs() < 1e-15);
        let r = residual(&ScalarField::zeros(grid), b, &bg, 0.3, &f, 2).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn normalize_examples() {
        let grid = TorusGrid::new(1, 4, 1.0).unwrap();
        let five = ScalarField::constant(grid, 5.0);
        assert!(normalize_sup(&five).values().iter().all(|&v| v == 0.0));
        let f = ScalarField::from_fn(grid, |x| (x[0] * 6.0).sin() - 2.0 * x[1]);
        let g = normalize_sup(&f);
        assert_eq!(g.max(), 0.0);
        assert_eq!(normalize_sup(&g), g);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(2, 0.5).validate().is_ok());
        assert!(SolverConfig::new(2, 0.0).validate().is_err());
        assert!(SolverConfig::new(2, 1.5).validate().is_err());
        let mut c = SolverConfig::new(2, 0.5);
        c.newton_tol = -1.0;
        assert!(c.validate().is_err());
    }
}
