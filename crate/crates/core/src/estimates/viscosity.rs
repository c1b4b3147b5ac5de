//! Discrete touching-function test of the viscosity sub/supersolution
//! inequalities.

use alloc::vec::Vec;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{binom, elem_sym, worst_margin};
use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{complex_hessian_at, ScalarField};
use crate::hermitian::{congruence_into, jacobi_eigh, MAX_DIM};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// At most this many offending points are listed in a report.
pub const MAX_LISTED: usize = 64;

/// Counts of violated touching inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    /// Grid points examined.
    pub checked: usize,
    /// Touching from above with `F(X + ηω) < e^{b+f} − tol`, or `X + ηω`
    /// outside the closed cone.
    pub sub_violations: usize,
    /// Touching from below with `F(X − ηω) > e^{b+f} + tol`.
    pub super_violations: usize,
    /// Supersolution tests skipped because `X − ηω` leaves the closed cone.
    pub super_skipped: usize,
    /// `10 h²`.
    pub tolerance: f64,
    /// First offending points, in visiting order.
    pub violating_points: Vec<usize>,
}

impl ViscosityReport {
    pub fn violations(&self) -> usize {
        self.sub_violations + self.super_violations
    }
}

/// Closed-cone tolerance on the normalized margins.
const CLOSED_TOL: f64 = 1e-12;

/// At each examined point the local second-order Taylor polynomial of `φ`
/// (the discrete complex Hessian) plus `±η|z − z_0|²`, `η ∈ {2h², 4h²}`,
/// touches `φ` from above/below; `F = (S_m/C(n,m))^{1/m}` of
/// `X ± ηω = χ + χ̃ + tω + i∂∂̄φ ± ηω` is compared with `e^{b+f}`.
///
/// `samples = None` examines every point; otherwise that many distinct
/// points are drawn with a seeded generator.
#[allow(clippy::too_many_arguments)]
pub fn viscosity_check(
    phi: &ScalarField,
    b: f64,
    bg: &BackgroundData,
    t: f64,
    f: &ScalarField,
    m: usize,
    samples: Option<usize>,
    seed: u64,
) -> Result<ViscosityReport> {
    let grid = *bg.grid();
    if *phi.grid() != grid || *f.grid() != grid {
        return Err(Error::Dimension("viscosity check fields live on different grids".into()));
    }
    let n = grid.dim();
    if m == 0 || m > n {
        return Err(Error::Config(alloc::format!("degree m={m} outside 1..={n}")));
    }
    let nn = n * n;
    let h = grid.spacing();
    let tolerance = 10.0 * h * h;
    let points: Vec<usize> = match samples {
        None => (0..grid.len()).collect(),
        Some(k) => {
            // partial Fisher-Yates
            let mut idx: Vec<usize> = (0..grid.len()).collect();
            let k = k.min(idx.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..k {
                let j = rng.random_range(i..idx.len());
                idx.swap(i, j);
            }
            idx.truncate(k);
            idx
        }
    };
    let base = bg.base_form(t);
    let constant_root = match bg.omega.as_constant() {
        Some(w) => Some(w.inv_sqrt()?),
        None => None,
    };
    let c_nm = binom(n, m);
    let inv_m = 1.0 / m as f64;
    let mut report = ViscosityReport {
        checked: points.len(),
        sub_violations: 0,
        super_violations: 0,
        super_skipped: 0,
        tolerance,
        violating_points: Vec::new(),
    };
    let mut x = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let mut shifted = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let mut red = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let mut lam = [0.0; MAX_DIM];
    for &p in &points {
        let local;
        let root: &[Complex64] = match &constant_root {
            Some(w) => w,
            None => {
                local = bg.omega.matrix_at(p).inv_sqrt()?;
                &local
            }
        };
        complex_hessian_at(phi.values(), &grid, p, &mut x[..nn]);
        for (xi, bi) in x[..nn].iter_mut().zip(base.at(p)) {
            *xi += bi;
        }
        let target = (b + f.values()[p]).exp();
        let omega = bg.omega.at(p);
        let mut bad = false;
        for eta in [2.0 * h * h, 4.0 * h * h] {
            for sign in [1.0, -1.0] {
                for k in 0..nn {
                    shifted[k] = x[k] + omega[k] * (sign * eta);
                }
                congruence_into(&shifted[..nn], root, n, &mut red[..nn]);
                jacobi_eigh(&mut red[..nn], n, None, &mut lam[..n]);
                let inside = worst_margin(&lam[..n], m) >= -CLOSED_TOL;
                let value = if inside { (elem_sym(&lam[..n], m)?.max(0.0) / c_nm).powf(inv_m) } else { f64::NAN };
                if sign > 0.0 {
                    if !inside || value < target - tolerance {
                        report.sub_violations += 1;
                        bad = true;
                    }
                } else if !inside {
                    report.super_skipped += 1;
                } else if value > target + tolerance {
                    report.super_violations += 1;
                    bad = true;
                }
            }
        }
        if bad && report.violating_points.len() < MAX_LISTED {
            report.violating_points.push(p);
        }
    }
    Ok(report)
}
