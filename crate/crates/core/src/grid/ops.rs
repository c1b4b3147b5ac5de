use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::{EigenField, HermitianField, ScalarField, TorusGrid};
use crate::error::{Error, Result};
use crate::hermitian::{congruence_into, jacobi_eigh, MAX_DIM};
use crate::sum::pairwise_sum_by;
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Which norm [`lp_norm`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Lp(f64),
    Sup,
}

impl From<f64> for Norm {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Norm::Sup
        } else {
            Norm::Lp(p)
        }
    }
}

/// Signed flat-index offsets to the periodic neighbours of one point.
struct Neighbours {
    plus: [isize; 2 * MAX_DIM],
    minus: [isize; 2 * MAX_DIM],
}

impl Neighbours {
    #[inline]
    fn of(grid: &TorusGrid, p: usize) -> Self {
        let np = grid.points_per_axis();
        let c = grid.coords(p);
        let mut plus = [0isize; 2 * MAX_DIM];
        let mut minus = [0isize; 2 * MAX_DIM];
        for a in 0..grid.axes() {
            let st = grid.stride(a) as isize;
            let wrap = (np as isize - 1) * st;
            plus[a] = if c[a] + 1 == np { -wrap } else { st };
            minus[a] = if c[a] == 0 { wrap } else { -st };
        }
        Neighbours { plus, minus }
    }

    /// Second-order centered second difference along axes `a`, `b`.
    #[inline]
    fn d2(&self, u: &[f64], p: usize, a: usize, b: usize, inv_h2: f64) -> f64 {
        let at = |off: isize| u[(p as isize + off) as usize];
        if a == b {
            (at(self.plus[a]) - 2.0 * u[p] + at(self.minus[a])) * inv_h2
        } else {
            let (pa, ma, pb, mb) = (self.plus[a], self.minus[a], self.plus[b], self.minus[b]);
            (at(pa + pb) - at(pa + mb) - at(ma + pb) + at(ma + mb)) * 0.25 * inv_h2
        }
    }
}

/// Discrete `∂²u/∂z_i∂z̄_j` at one point, written row-major to `out` (`n²`).
///
/// Uses `¼(u_{x_i x_j} + u_{y_i y_j}) + (i/4)(u_{x_i y_j} − u_{y_i x_j})` with
/// three-point second differences on a single axis and the four-point
/// centered stencil for mixed axes.
pub fn complex_hessian_at(u: &[f64], grid: &TorusGrid, p: usize, out: &mut [Complex64]) {
    let n = grid.dim();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let nb = Neighbours::of(grid, p);
    for i in 0..n {
        let (xi, yi) = (2 * i, 2 * i + 1);
        let re = 0.25 * (nb.d2(u, p, xi, xi, inv_h2) + nb.d2(u, p, yi, yi, inv_h2));
        out[i * n + i] = Complex64::new(re, 0.0);
        for j in (i + 1)..n {
            let (xj, yj) = (2 * j, 2 * j + 1);
            let re = 0.25 * (nb.d2(u, p, xi, xj, inv_h2) + nb.d2(u, p, yi, yj, inv_h2));
            let im = 0.25 * (nb.d2(u, p, xi, yj, inv_h2) - nb.d2(u, p, yi, xj, inv_h2));
            out[i * n + j] = Complex64::new(re, im);
            out[j * n + i] = Complex64::new(re, -im);
        }
    }
}

/// Discrete complex Hessian `i∂∂̄u` of a scalar field.
pub fn complex_hessian(phi: &ScalarField) -> HermitianField {
    let grid = *phi.grid();
    let n = grid.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len() * n * n];
    for (p, block) in out.chunks_exact_mut(n * n).enumerate() {
        complex_hessian_at(phi.values(), &grid, p, block);
    }
    HermitianField::pointwise_unchecked(grid, out)
}

/// Centered discrete `∂u/∂z_i = ½(u_{x_i} − i u_{y_i})` at one point.
pub fn gradient_at(u: &[f64], grid: &TorusGrid, p: usize) -> [Complex64; MAX_DIM] {
    let h = grid.spacing();
    let mut g = [Complex64::new(0.0, 0.0); MAX_DIM];
    for (i, gi) in g.iter_mut().enumerate().take(grid.dim()) {
        let dx = (u[grid.shift(p, 2 * i, 1)] - u[grid.shift(p, 2 * i, -1)]) / (2.0 * h);
        let dy = (u[grid.shift(p, 2 * i + 1, 1)] - u[grid.shift(p, 2 * i + 1, -1)]) / (2.0 * h);
        *gi = Complex64::new(0.5 * dx, -0.5 * dy);
    }
    g
}

/// Pointwise generalized eigenvalues of `A` with respect to `G`, descending.
pub fn eigen_field(a: &HermitianField, g: &HermitianField) -> Result<EigenField> {
    let grid = *a.grid();
    if *g.grid() != grid {
        return Err(Error::Dimension("fields live on different grids".into()));
    }
    let n = grid.dim();
    let nn = n * n;
    let mut values = vec![0.0; grid.len() * n];
    let constant_w = match g.as_constant() {
        Some(m) => Some(m.inv_sqrt()?),
        None => None,
    };
    let mut reduced = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    for p in 0..grid.len() {
        let local;
        let w: &[Complex64] = match &constant_w {
            Some(w) => w,
            None => {
                local = g.matrix_at(p).inv_sqrt().map_err(|e| match e {
                    Error::SingularMetric { min_eigenvalue, .. } => {
                        Error::SingularMetric { min_eigenvalue, point: Some(p) }
                    }
                    other => other,
                })?;
                &local
            }
        };
        congruence_into(a.at(p), w, n, &mut reduced[..nn]);
        jacobi_eigh(&mut reduced[..nn], n, None, &mut values[p * n..(p + 1) * n]);
    }
    Ok(EigenField::new(grid, values))
}

/// `h^{2n} Σ g · volume`, summed in a fixed pairwise order.
pub fn integrate(g: &ScalarField, volume: &ScalarField) -> f64 {
    let grid = g.grid();
    let (gv, vv) = (g.values(), volume.values());
    grid.cell_volume() * pairwise_sum_by(grid.len(), &|p| gv[p] * vv[p])
}

/// `(∫|g|^p dvol)^{1/p}`, or the grid maximum of `|g|` for the sup norm.
pub fn lp_norm(g: &ScalarField, norm: impl Into<Norm>, volume: &ScalarField) -> Result<f64> {
    match norm.into() {
        Norm::Sup => Ok(g.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()))),
        Norm::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::Domain(alloc::format!("L^p norm needs p ≥ 1, got {p}")));
            }
            let grid = g.grid();
            let (gv, vv) = (g.values(), volume.values());
            let s = grid.cell_volume() * pairwise_sum_by(grid.len(), &|i| gv[i].abs().powf(p) * vv[i]);
            Ok(s.powf(1.0 / p))
        }
    }
}

/// `log ∫ e^{nf} (1 + n|f|)^p dvol`, evaluated by log-sum-exp.
pub fn log_entropy_functional(f: &ScalarField, p: f64, volume: &ScalarField) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(alloc::format!("entropy exponent must be positive, got {p}")));
    }
    let grid = f.grid();
    let nf = grid.dim() as f64;
    let (fv, vv) = (f.values(), volume.values());
    let expo: Vec<f64> = fv.iter().map(|&x| nf * x + p * (1.0 + nf * x.abs()).ln()).collect();
    let top = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s = pairwise_sum_by(grid.len(), &|i| (expo[i] - top).exp() * vv[i]);
    Ok(top + (grid.cell_volume() * s).ln())
}

/// `∫ e^{nf} (1 + n|f|)^p dvol`; switches to log-space when `nf > 300`
/// somewhere, so the result overflows to `+∞` only when the value itself does.
pub fn entropy_functional(f: &ScalarField, p: f64, volume: &ScalarField) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(alloc::format!("entropy exponent must be positive, got {p}")));
    }
    let grid = f.grid();
    let nf = grid.dim() as f64;
    if f.max() * nf > 300.0 {
        return Ok(log_entropy_functional(f, p, volume)?.exp());
    }
    let (fv, vv) = (f.values(), volume.values());
    Ok(grid.cell_volume()
        * pairwise_sum_by(grid.len(), &|i| (nf * fv[i]).exp() * (1.0 + nf * fv[i].abs()).powf(p) * vv[i]))
}

/// Periodic Gaussian smoothing with standard deviation `sigma` (physical
/// units), applied as a separable convolution with the sampled, periodized,
/// unit-sum kernel. `sigma = 0` returns the input.
pub fn mollify(g: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain("mollifier width must be nonnegative".into()));
    }
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let grid = *g.grid();
    let np = grid.points_per_axis();
    let h = grid.spacing();
    let l = grid.period();
    let wraps = (6.0 * sigma / l).ceil() as i64 + 1;
    let mut kernel = vec![0.0; np];
    for (j, k) in kernel.iter_mut().enumerate() {
        let mut acc = 0.0;
        for q in -wraps..=wraps {
            let d = j as f64 * h + q as f64 * l;
            acc += (-(d * d) / (2.0 * sigma * sigma)).exp();
        }
        *k = acc;
    }
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }
    let mut cur = g.values().to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut line = vec![0.0; np];
    for axis in 0..grid.axes() {
        let stride = grid.stride(axis);
        for start in line_starts(&grid, axis) {
            for (c, v) in line.iter_mut().enumerate() {
                *v = cur[start + c * stride];
            }
            for c in 0..np {
                let mut acc = 0.0;
                for (j, &w) in kernel.iter().enumerate() {
                    acc += w * line[(c + np - j) % np];
                }
                next[start + c * stride] = acc;
            }
        }
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(ScalarField::from_vec_unchecked(grid, cur))
}

/// Flat indices with coordinate zero along `axis`: the starts of the grid
/// lines parallel to that axis.
pub(crate) fn line_starts(grid: &TorusGrid, axis: usize) -> impl Iterator<Item = usize> + '_ {
    let stride = grid.stride(axis);
    let np = grid.points_per_axis();
    (0..grid.len()).filter(move |p| (p / stride).is_multiple_of(np))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn hessian_of_constant_is_zero() {
        let grid = TorusGrid::new(2, 8, 1.0).unwrap();
        let phi = ScalarField::constant(grid, 3.5);
        let hess = complex_hessian(&phi);
        for p in 0..grid.len() {
            assert!(hess.at(p).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn mollify_fixed_points() {
        let grid = TorusGrid::new(1, 16, 1.0).unwrap();
        let c = ScalarField::constant(grid, 2.0);
        let m = mollify(&c, 0.1).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.0).abs() < 1e-14));
        let g = ScalarField::from_fn(grid, |x| (2.0 * PI * x[0]).sin() + x[1]);
        assert_eq!(mollify(&g, 0.0).unwrap(), g);
    }

    #[test]
    fn lp_norm_of_constant_and_spike() {
        let grid = TorusGrid::new(1, 8, 1.0).unwrap();
        let vol = ScalarField::constant(grid, 1.0);
        let c = ScalarField::constant(grid, -3.0);
        assert!((lp_norm(&c, 2.0, &vol).unwrap() - 3.0).abs() < 1e-14);
        let mut spike = ScalarField::zeros(grid);
        spike.values_mut()[17] = 7.5;
        assert_eq!(lp_norm(&spike, f64::INFINITY, &vol).unwrap(), 7.5);
        assert!(lp_norm(&c, 0.5, &vol).is_err());
    }

    #[test]
    fn entropy_of_zero_and_constant() {
        let grid = TorusGrid::new(2, 4, 1.0).unwrap();
        let vol = ScalarField::constant(grid, 1.0);
        let z = ScalarField::zeros(grid);
        assert!((entropy_functional(&z, 3.0, &vol).unwrap() - 1.0).abs() < 1e-14);
        let c = ScalarField::constant(grid, -0.4);
        let expect = (2.0 * -0.4f64).exp() * (1.0 + 0.8f64).powf(3.0);
        assert!((entropy_functional(&c, 3.0, &vol).unwrap() - expect).abs() < 1e-13);
        // log-space branch
        let big = ScalarField::constant(grid, 200.0);
        let log_expect = 400.0 + 3.0 * (401.0f64).ln();
        let got = log_entropy_functional(&big, 3.0, &vol).unwrap();
        assert!((got - log_expect).abs() < 1e-10);
        assert!((entropy_functional(&big, 3.0, &vol).unwrap().ln() - log_expect).abs() < 1e-10);
        let huge = ScalarField::constant(grid, 400.0);
        assert!(entropy_functional(&huge, 3.0, &vol).unwrap().is_infinite());
    }
}
