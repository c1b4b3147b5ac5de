//! Built-in data: trigonometric polynomials with analytic derivatives,
//! right-hand sides `f`, and manufactured problems.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{binom, elem_sym, worst_margin};
use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{eigen_field, HermitianField, ScalarField, TorusGrid};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// One term `c·cos(κ·x) + s·sin(κ·x)` with integer wave vector `k`, `κ = 2πk/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub wave: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

/// A real trigonometric polynomial on the torus of period `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    n: usize,
    period: f64,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(n: usize, period: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        if terms.iter().any(|t| t.wave.len() != 2 * n) {
            return Err(Error::Dimension("wave vector length must equal 2n".into()));
        }
        Ok(TrigPolynomial { n, period, terms })
    }

    /// Random mean-zero polynomial with `terms` modes of max index
    /// `max_mode`, scaled so the operator norm of its complex Hessian is at
    /// most `hessian_bound` everywhere.
    pub fn random(
        n: usize,
        period: f64,
        max_mode: i32,
        terms: usize,
        hessian_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        if max_mode < 1 || terms == 0 {
            return Err(Error::Config("random trigonometric polynomial needs max_mode ≥ 1 and ≥ 1 term".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(terms);
        while out.len() < terms {
            let wave: Vec<i32> = (0..2 * n).map(|_| rng.random_range(-max_mode..=max_mode)).collect();
            if wave.iter().all(|&k| k == 0) {
                continue;
            }
            out.push(TrigTerm { wave, cos: rng.random_range(-1.0..1.0), sin: rng.random_range(-1.0..1.0) });
        }
        let mut poly = TrigPolynomial { n, period, terms: out };
        let bound = poly.hessian_norm_bound();
        if bound > 0.0 {
            poly = poly.scaled(hessian_bound / bound);
        }
        Ok(poly)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn scaled(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TrigTerm { wave: t.wave.clone(), cos: t.cos * s, sin: t.sin * s })
            .collect();
        TrigPolynomial { n: self.n, period: self.period, terms }
    }

    fn kappa(&self, t: &TrigTerm, a: usize) -> f64 {
        2.0 * PI * t.wave[a] as f64 / self.period
    }

    fn phase(&self, t: &TrigTerm, x: &[f64]) -> f64 {
        (0..2 * self.n).map(|a| self.kappa(t, a) * x[a]).sum()
    }

    /// Upper bound `Σ (|c| + |s|) |κ|² / 4` on the complex Hessian norm.
    pub fn hessian_norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k2: f64 = (0..2 * self.n).map(|a| self.kappa(t, a).powi(2)).sum();
                (t.cos.abs() + t.sin.abs()) * k2 / 4.0
            })
            .sum()
    }

    /// Upper bound on `sup |u|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = self.phase(t, x);
                t.cos * th.cos() + t.sin * th.sin()
            })
            .sum()
    }

    /// Real Hessian `∂_a∂_b u`, `2n × 2n` row-major.
    pub fn real_hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = 2 * self.n;
        let mut h = vec![0.0; d * d];
        for t in &self.terms {
            let th = self.phase(t, x);
            let v = t.cos * th.cos() + t.sin * th.sin();
            for a in 0..d {
                for b in 0..d {
                    h[a * d + b] -= self.kappa(t, a) * self.kappa(t, b) * v;
                }
            }
        }
        h
    }

    /// Analytic `∂²u/∂z_i∂z̄_j`, `n × n` row-major.
    pub fn complex_hessian(&self, x: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let d = 2 * n;
        let r = self.real_hessian(x);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                let re = 0.25 * (r[xi * d + xj] + r[yi * d + yj]);
                let im = 0.25 * (r[xi * d + yj] - r[yi * d + xj]);
                out[i * n + j] = Complex64::new(re, im);
            }
        }
        out
    }

    pub fn sample(&self, grid: TorusGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x))
    }

    /// Analytic complex Hessian sampled on the grid.
    pub fn sample_complex_hessian(&self, grid: TorusGrid) -> HermitianField {
        let mut entries = Vec::with_capacity(grid.len() * self.n * self.n);
        for p in 0..grid.len() {
            entries.extend(self.complex_hessian(&grid.position(p)[..grid.axes()]));
        }
        HermitianField::pointwise(grid, entries).expect("analytic Hessian is finite")
    }
}

/// Built-in right-hand sides `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsGenerator {
    Constant { value: f64 },
    /// Seeded trigonometric polynomial with the given sup amplitude bound.
    Trig { amplitude: f64, max_mode: i32, terms: usize, seed: u64 },
    /// `height · exp(-d(x, center)² / (2 width²))` with torus distance `d`.
    GaussianBump { center: Vec<f64>, width: f64, height: f64 },
    /// `e^{nf} = min(cap, d(x, center)^{-a})` with `a = fraction · 2n / q`, so
    /// `e^{nf} ∈ L^q` but is unbounded as the grid refines.
    LqSample { center: Vec<f64>, q: f64, fraction: f64, cap: f64 },
}

/// Torus distance between two points of `[0, L)^{2n}`.
pub fn torus_distance(x: &[f64], y: &[f64], period: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let mut d = (a - b).abs() % period;
            if d > period / 2.0 {
                d = period - d;
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl RhsGenerator {
    pub fn generate(&self, grid: TorusGrid) -> Result<ScalarField> {
        let n = grid.dim();
        let l = grid.period();
        match self {
            RhsGenerator::Constant { value } => Ok(ScalarField::constant(grid, *value)),
            RhsGenerator::Trig { amplitude, max_mode, terms, seed } => {
                let poly = TrigPolynomial::random(n, l, *max_mode, *terms, 1.0, *seed)?;
                let amp = poly.amplitude_bound();
                let poly = poly.scaled(if amp > 0.0 { amplitude / amp } else { 0.0 });
                Ok(poly.sample(grid))
            }
            RhsGenerator::GaussianBump { center, width, height } => {
                check_center(center, n)?;
                if !(*width > 0.0) {
                    return Err(Error::Config("bump width must be positive".into()));
                }
                Ok(ScalarField::from_fn(grid, |x| {
                    let d = torus_distance(x, center, l);
                    height * (-(d * d) / (2.0 * width * width)).exp()
                }))
            }
            RhsGenerator::LqSample { center, q, fraction, cap } => {
                check_center(center, n)?;
                if !(*q > 1.0) || !(*fraction > 0.0 && *fraction < 1.0) || !(*cap > 1.0) {
                    return Err(Error::Config("L^q sample needs q > 1, 0 < fraction < 1, cap > 1".into()));
                }
                let a = fraction * 2.0 * n as f64 / q;
                let nf = n as f64;
                Ok(ScalarField::from_fn(grid, |x| {
                    let d = torus_distance(x, center, l);
                    let v = if d > 0.0 { d.powf(-a).min(*cap) } else { *cap };
                    v.ln() / nf
                }))
            }
        }
    }
}

fn check_center(center: &[f64], n: usize) -> Result<()> {
    if center.len() != 2 * n {
        return Err(Error::Config(alloc::format!("center needs {} coordinates", 2 * n)));
    }
    Ok(())
}

/// A manufactured problem: exact `φ*`, the right-hand side `f*` that it
/// solves with `b = 0`, and the smallest cone margin along the way.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub phi_star: TrigPolynomial,
    pub phi_exact: ScalarField,
    pub f_star: ScalarField,
    pub min_margin: f64,
}

/// Builds `f* = (1/m)(log S_m(λ(χ + χ̃ + tω + i∂∂̄φ*)) − log C(n,m))` from the
/// analytic Hessian of `φ*`, so the discrete solution differs from `φ*` only
/// by truncation error.
pub fn manufactured_problem(
    bg: &BackgroundData,
    t: f64,
    phi_star: TrigPolynomial,
    m: usize,
) -> Result<Manufactured> {
    let grid = *bg.grid();
    let n = grid.dim();
    let x = bg.base_form(t).add(&phi_star.sample_complex_hessian(grid));
    let eig = eigen_field(&x, &bg.omega)?;
    let mut f = vec![0.0; grid.len()];
    let mut min_margin = f64::INFINITY;
    let log_c = binom(n, m).ln();
    for (p, fv) in f.iter_mut().enumerate() {
        let lam = eig.at(p);
        let w = worst_margin(lam, m);
        min_margin = min_margin.min(w);
        if w <= 0.0 {
            return Err(Error::OutsideCone { worst_margin: w, point: Some(p) });
        }
        *fv = (elem_sym(lam, m)?.ln() - log_c) / m as f64;
    }
    Ok(Manufactured {
        phi_exact: phi_star.sample(grid),
        phi_star,
        f_star: ScalarField::new(grid, f)?,
        min_margin,
    })
}

/// Seeded smooth perturbation with `sup |u| ≤ amplitude` (modes ≤ 1).
pub fn smooth_noise(grid: TorusGrid, amplitude: f64, seed: u64) -> Result<ScalarField> {
    let poly = TrigPolynomial::random(grid.dim(), grid.period(), 1, 4, 1.0, seed)?;
    let amp = poly.amplitude_bound();
    Ok(poly.scaled(amplitude / amp).sample(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_hessian_of_periodic_paraboloid() {
        // u = (L/2π)²(1 − cos(2πx₁/L)) + (L/2π)²(1 − cos(2πy₁/L))
        let l = 1.0;
        let c = (l / (2.0 * PI)).powi(2);
        let poly = TrigPolynomial::new(
            2,
            l,
            vec![
                TrigTerm { wave: vec![1, 0, 0, 0], cos: -c, sin: 0.0 },
                TrigTerm { wave: vec![0, 1, 0, 0], cos: -c, sin: 0.0 },
            ],
        )
        .unwrap();
        let x = [0.1, 0.3, 0.7, 0.2];
        let h = poly.complex_hessian(&x);
        let expect = 0.25 * ((2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos());
        assert!((h[0].re - expect).abs() < 1e-14);
        assert!(h[1].norm() < 1e-14 && h[3].norm() < 1e-14);
    }

    #[test]
    fn random_poly_is_seeded_and_scaled() {
        let a = TrigPolynomial::random(2, 1.0, 1, 5, 0.3, 7).unwrap();
        let b = TrigPolynomial::random(2, 1.0, 1, 5, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.hessian_norm_bound() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lq_sample_is_capped() {
        let grid = TorusGrid::new(1, 8, 1.0).unwrap();
        let gen = RhsGenerator::LqSample { center: vec![0.0, 0.0], q: 2.0, fraction: 0.5, cap: 50.0 };
        let f = gen.generate(grid).unwrap();
        assert!((f.values()[0] - 50f64.ln()).abs() < 1e-14);
        assert!(f.max() <= 50f64.ln() + 1e-14);
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_distance(&[0.05, 0.0], &[0.95, 0.0], 1.0) - 0.1).abs() < 1e-14);
    }
}
