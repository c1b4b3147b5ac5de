//! Uniqueness energy, the `tr_ω X` monitor and the sup-norm uniformity table.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{complex_hessian, eigen_field, entropy_functional, gradient_at, integrate, ScalarField};
use crate::hermitian::HermitianMatrix;
use crate::solver::{median, SolverState};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// `T = tr_ω(α) ω^{-1} − ω^{-1} α ω^{-1}` at one point.
fn energy_tensor(alpha: &HermitianMatrix, omega_inv: &HermitianMatrix) -> Vec<Complex64> {
    let n = alpha.dim();
    let (a, w) = (alpha.entries(), omega_inv.entries());
    let mut wa = alloc::vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            wa[i * n + j] = (0..n).map(|k| w[i * n + k] * a[k * n + j]).sum();
        }
    }
    let tr: f64 = (0..n).map(|i| wa[i * n + i].re).sum();
    let mut t = alloc::vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let waw: Complex64 = (0..n).map(|k| wa[i * n + k] * w[k * n + j]).sum();
            t[i * n + j] = w[i * n + j] * tr - waw;
        }
    }
    t
}

/// `E[u] = ∫ Σ T^{ij} ∂_i u ∂_{j̄} u dV`, the quadratic form of
/// `i∂u ∧ ∂̄u ∧ α ∧ ω^{n−2}` with `α = χ + χ̃ + tω` (positive semidefinite
/// when `α ≥ 0`). Derivatives are centered differences.
pub fn energy_form(u: &ScalarField, bg: &BackgroundData, t: f64) -> Result<f64> {
    let grid = *bg.grid();
    if *u.grid() != grid {
        return Err(Error::Dimension("energy field lives on a different grid".into()));
    }
    let n = grid.dim();
    if n < 2 {
        return Err(Error::Domain("the uniqueness energy needs n ≥ 2".into()));
    }
    let alpha = bg.base_form(t);
    let constant = match (alpha.as_constant(), bg.omega.as_constant()) {
        (Some(a), Some(w)) => Some(energy_tensor(a, &w.inverse_pd()?)),
        _ => None,
    };
    let mut density = alloc::vec![0.0; grid.len()];
    for (p, d) in density.iter_mut().enumerate() {
        let local;
        let tensor: &[Complex64] = match &constant {
            Some(tt) => tt,
            None => {
                local = energy_tensor(&alpha.matrix_at(p), &bg.omega.matrix_at(p).inverse_pd()?);
                &local
            }
        };
        let g = gradient_at(u.values(), &grid, p);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (tensor[i * n + j] * g[i] * g[j].conj()).re;
            }
        }
        // the volume density is applied by integrate()
        *d = acc;
    }
    Ok(integrate(&ScalarField::new(grid, density)?, bg.volume()))
}

/// `E[φ_1 − φ_2]`.
pub fn uniqueness_energy(phi1: &ScalarField, phi2: &ScalarField, bg: &BackgroundData, t: f64) -> Result<f64> {
    if phi1.grid() != phi2.grid() {
        return Err(Error::Dimension("uniqueness pair lives on different grids".into()));
    }
    energy_form(&phi1.zip_map(phi2, |a, b| a - b), bg, t)
}

/// `∫ Σ_i |∂_i u|² dV` (flat).
fn gradient_energy(u: &ScalarField, volume: &ScalarField) -> f64 {
    let grid = *u.grid();
    let dens: Vec<f64> = (0..grid.len())
        .map(|p| gradient_at(u.values(), &grid, p).iter().take(grid.dim()).map(|g| g.norm_sqr()).sum())
        .collect();
    integrate(&ScalarField::from_vec_unchecked(grid, dens), volume)
}

/// [`uniqueness_energy`] divided by `‖α‖ max(∫|∂φ_1|² + ∫|∂φ_2|², ∫dV)`
/// with `‖α‖` the largest entry modulus of `χ + χ̃ + tω`. The volume floor
/// keeps nearly constant pairs (round-off gradients only) from reading as
/// order one; 0 when the energy vanishes.
pub fn uniqueness_energy_normalized(
    phi1: &ScalarField,
    phi2: &ScalarField,
    bg: &BackgroundData,
    t: f64,
) -> Result<f64> {
    let e = uniqueness_energy(phi1, phi2, bg, t)?;
    let alpha = bg.base_form(t);
    let norm = (0..bg.grid().len()).map(|p| alpha.matrix_at(p).max_abs()).fold(0.0, f64::max);
    let total_volume = integrate(&ScalarField::constant(*bg.grid(), 1.0), bg.volume());
    let grads = gradient_energy(phi1, bg.volume()) + gradient_energy(phi2, bg.volume());
    let den = norm * grads.max(total_volume);
    if den == 0.0 {
        return Ok(if e == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(e / den)
}

/// Both sides of the maximum-principle bound for `w = tr_ω X`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// `max w` with `w = S_1(λ(X))`.
    pub sup_w: f64,
    /// `2^{m−2} n e^{mb} max[e^f(|Δ_ω e^f|^{m−1} + (Aκ)^{m−1} e^{(m−1)f})] − A inf φ`.
    pub bound_rhs: f64,
    pub a: f64,
    pub kappa: f64,
    /// Geometric constant `C(χ, χ̃, ω)`; zero on the flat constant torus.
    pub c_geometry: f64,
    /// `max |S_1(λ(X)) − tr(ω^{-1}X)| / max(1, |tr(ω^{-1}X)|)`.
    pub trace_consistency: f64,
    pub holds: bool,
}

/// Monitor result, or the reason it did not run.
#[derive(Debug, Clone, PartialEq)]
pub enum MonitorOutcome {
    Report(MonitorReport),
    Skipped(String),
}

/// Evaluates `w` and the right-hand side of its bound with `ρ ≡ 0`, vanishing
/// curvature and `A = (C(χ,χ̃,ω) + 1)/κ`. Runs only on constant-coefficient
/// backgrounds with `κ > 0`.
pub fn laplacian_monitor(
    state: &SolverState,
    bg: &BackgroundData,
    t: f64,
    f: &ScalarField,
    m: usize,
) -> Result<MonitorOutcome> {
    let grid = *bg.grid();
    if *state.phi.grid() != grid || *f.grid() != grid {
        return Err(Error::Dimension("monitor fields live on different grids".into()));
    }
    if !(bg.kappa > 0.0) {
        return Ok(MonitorOutcome::Skipped("χ̃ ≥ κω needs κ > 0".into()));
    }
    if !bg.is_constant_coefficient() {
        return Ok(MonitorOutcome::Skipped("the monitor assumes constant ω, χ, χ̃ (flat torus)".into()));
    }
    let n = grid.dim();
    let x = bg.base_form(t).add(&complex_hessian(&state.phi));
    let eig = eigen_field(&x, &bg.omega)?;
    let omega_inv = bg.omega.matrix_at(0).inverse_pd()?;
    let trace_of = |h: &[Complex64]| -> f64 {
        let w = omega_inv.entries();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (w[i * n + j] * h[j * n + i]).re;
            }
        }
        acc
    };
    let mut sup_w = f64::NEG_INFINITY;
    let mut consistency: f64 = 0.0;
    for p in 0..grid.len() {
        let w: f64 = eig.at(p).iter().sum();
        let tr = trace_of(x.at(p));
        consistency = consistency.max((w - tr).abs() / tr.abs().max(1.0));
        sup_w = sup_w.max(w);
    }
    let c_geometry = 0.0;
    let a = (c_geometry + 1.0) / bg.kappa;
    let ef = f.map(|v| v.exp());
    let lap = complex_hessian(&ef);
    let mf = m as f64;
    let ak = a * bg.kappa;
    let mut peak: f64 = 0.0;
    for p in 0..grid.len() {
        let e = ef.values()[p];
        let l = trace_of(lap.at(p)).abs();
        peak = peak.max(e * (l.powf(mf - 1.0) + ak.powf(mf - 1.0) * e.powf(mf - 1.0)));
    }
    let bound_rhs = 2f64.powf(mf - 2.0) * n as f64 * (mf * state.b).exp() * peak - a * state.phi.min();
    Ok(MonitorOutcome::Report(MonitorReport {
        sup_w,
        bound_rhs,
        a,
        kappa: bg.kappa,
        c_geometry,
        trace_consistency: consistency,
        holds: sup_w <= bound_rhs,
    }))
}

/// One stage of the uniformity table.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityRow {
    pub t: f64,
    pub sup_norm: f64,
    /// `∫ e^{nf}(1 + n|f|)^p dV` of the stage's right-hand side.
    pub entropy: f64,
}

/// Sup norms over the schedule and the proxy `max ≤ 3 · median`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    pub rows: Vec<UniformityRow>,
    pub max: f64,
    pub median: f64,
    pub holds: bool,
}

/// Builds the table; `fs` holds either one right-hand side for all stages or
/// one per stage.
pub fn linf_uniformity_report(
    t_values: &[f64],
    phis: &[ScalarField],
    fs: &[ScalarField],
    p: f64,
    volume: &ScalarField,
) -> Result<UniformityReport> {
    if phis.is_empty() || t_values.len() != phis.len() {
        return Err(Error::Domain("uniformity report needs one nonempty state per t".into()));
    }
    if fs.len() != 1 && fs.len() != phis.len() {
        return Err(Error::Dimension("give one f or one f per stage".into()));
    }
    let mut rows = Vec::with_capacity(phis.len());
    for (i, (phi, &t)) in phis.iter().zip(t_values).enumerate() {
        let f = if fs.len() == 1 { &fs[0] } else { &fs[i] };
        rows.push(UniformityRow {
            t,
            sup_norm: phi.values().iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            entropy: entropy_functional(f, p, volume)?,
        });
    }
    let norms: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let med = median(&norms);
    Ok(UniformityReport { rows, max, median: med, holds: max <= 3.0 * med })
}
