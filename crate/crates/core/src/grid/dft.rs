//! Separable discrete Fourier transforms on the torus grid.
//!
//! Each grid line is transformed by a recursive mixed-radix Cooley-Tukey FFT
//! (direct sums on prime factors), which keeps the kernel free of platform FFT
//! dependencies. Used for the constant-coefficient preconditioner and for the
//! spectral-derivative test oracle.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use super::ops::line_starts;
use super::{HermitianField, ScalarField, TorusGrid};
use crate::hermitian::MAX_DIM;
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Precomputed twiddles and line layout for one grid.
#[derive(Debug, Clone)]
pub struct Dft {
    grid: TorusGrid,
    twiddles: Vec<Complex64>,
    inverse_twiddles: Vec<Complex64>,
    factors: Vec<usize>,
    starts: Vec<Vec<usize>>,
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while n.is_multiple_of(4) {
        out.push(4);
        n /= 4;
    }
    let mut p = 2;
    while n > 1 {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    out
}

/// Out-of-place decimation-in-time FFT of `x[0], x[stride], …` (length `len`)
/// into `out`. `tw[j] = e^{∓2πij/N}` for the full line length `N`;
/// `tw_step = N/len`.
fn fft_rec(
    x: &[Complex64],
    stride: usize,
    len: usize,
    out: &mut [Complex64],
    factors: &[usize],
    tw: &[Complex64],
    tw_step: usize,
) {
    if len == 1 {
        out[0] = x[0];
        return;
    }
    let p = factors[0];
    let q = len / p;
    for r in 0..p {
        fft_rec(&x[r * stride..], stride * p, q, &mut out[r * q..(r + 1) * q], &factors[1..], tw, tw_step * p);
    }
    let tw_p = tw.len() / p;
    let mut small = [Complex64::new(0.0, 0.0); 8];
    let mut scratch = Vec::new();
    let t: &mut [Complex64] = if p <= small.len() {
        &mut small[..p]
    } else {
        scratch.resize(p, Complex64::new(0.0, 0.0));
        &mut scratch
    };
    for k in 0..q {
        // r·k·tw_step < N, so no reduction is needed
        for (r, tr) in t.iter_mut().enumerate() {
            *tr = out[r * q + k] * tw[r * k * tw_step];
        }
        for s in 0..p {
            let mut acc = t[0];
            let mut idx = 0;
            for &tr in &t[1..] {
                idx += s;
                if idx >= p {
                    idx -= p;
                }
                acc += tr * tw[idx * tw_p];
            }
            out[k + s * q] = acc;
        }
    }
}

impl Dft {
    pub fn new(grid: TorusGrid) -> Self {
        let np = grid.points_per_axis();
        let twiddles: Vec<Complex64> = (0..np)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / np as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        let inverse_twiddles = twiddles.iter().map(|w| w.conj()).collect();
        let starts = (0..grid.axes()).map(|a| line_starts(&grid, a).collect()).collect();
        Dft { grid, twiddles, inverse_twiddles, factors: factorize(np), starts }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let np = self.grid.points_per_axis();
        let tw = if inverse { &self.inverse_twiddles } else { &self.twiddles };
        let mut line = vec![Complex64::new(0.0, 0.0); np];
        let mut out = vec![Complex64::new(0.0, 0.0); np];
        for axis in 0..self.grid.axes() {
            let stride = self.grid.stride(axis);
            for &start in &self.starts[axis] {
                for (c, v) in line.iter_mut().enumerate() {
                    *v = data[start + c * stride];
                }
                fft_rec(&line, 1, np, &mut out, &self.factors, tw, 1);
                for (c, &v) in out.iter().enumerate() {
                    data[start + c * stride] = v;
                }
            }
        }
        if inverse {
            let scale = 1.0 / self.grid.len() as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Signed frequency index of coordinate `k` (`-N/2 < m ≤ N/2`).
    pub fn signed_frequency(&self, k: usize) -> i64 {
        let np = self.grid.points_per_axis();
        if k <= np / 2 {
            k as i64
        } else {
            k as i64 - np as i64
        }
    }
}

/// Symbol of the discrete complex Hessian at the grid angles `theta`.
fn fd_hessian_symbol(theta: &[f64], n: usize, h: f64, out: &mut [Complex64]) {
    let inv_h2 = 1.0 / (h * h);
    let s = |a: usize, b: usize| -> f64 {
        if a == b {
            let t = (theta[a] * 0.5).sin();
            -4.0 * t * t * inv_h2
        } else {
            -theta[a].sin() * theta[b].sin() * inv_h2
        }
    };
    for i in 0..n {
        for j in 0..n {
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            let re = 0.25 * (s(xi, xj) + s(yi, yj));
            let im = if i == j { 0.0 } else { 0.25 * (s(xi, yj) - s(yi, xj)) };
            out[i * n + j] = Complex64::new(re, im);
        }
    }
}

/// Exact inverse of the constant-coefficient operator
/// `u ↦ Re tr(A · i∂∂̄_h u)` on mean-zero fields, diagonalized by the DFT.
#[derive(Debug, Clone)]
pub struct ConstantCoefficientSolver {
    dft: Dft,
    symbol: Vec<f64>,
}

impl ConstantCoefficientSolver {
    /// `coeff` is a row-major Hermitian `n × n` matrix, assumed positive
    /// definite so the symbol vanishes only at the zero frequency.
    pub fn new(grid: TorusGrid, coeff: &[Complex64]) -> Self {
        Self::with_dft(Dft::new(grid), coeff)
    }

    pub fn with_dft(dft: Dft, coeff: &[Complex64]) -> Self {
        let len = dft.grid().len();
        let mut solver = ConstantCoefficientSolver { dft, symbol: vec![0.0; len] };
        solver.set_coefficient(coeff);
        solver
    }

    /// Replaces the coefficient matrix, keeping the transform tables.
    pub fn set_coefficient(&mut self, coeff: &[Complex64]) {
        let grid = *self.dft.grid();
        let n = grid.dim();
        let np = grid.points_per_axis();
        let h = grid.spacing();
        let mut theta = [0.0; 2 * MAX_DIM];
        let mut hs = [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        for (p, sym) in self.symbol.iter_mut().enumerate() {
            let c = grid.coords(p);
            for a in 0..grid.axes() {
                theta[a] = 2.0 * PI * c[a] as f64 / np as f64;
            }
            fd_hessian_symbol(&theta, n, h, &mut hs);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += (coeff[j * n + i] * hs[i * n + j]).re;
                }
            }
            *sym = acc;
        }
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    /// Mean-zero `u` with `L u = rhs − mean(rhs)`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.dft.forward(&mut buf);
        for (v, &s) in buf.iter_mut().zip(&self.symbol) {
            if s.abs() > 1e-300 {
                *v /= s;
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        buf[0] = Complex64::new(0.0, 0.0);
        self.dft.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Applies the operator spectrally (used to cross-check the stencils).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.dft.forward(&mut buf);
        for (v, &s) in buf.iter_mut().zip(&self.symbol) {
            *v *= s;
        }
        self.dft.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

/// Spectrally exact complex Hessian of a grid function (test oracle for the
/// finite-difference stencils). The Nyquist mode is dropped from first
/// derivatives.
pub fn spectral_complex_hessian(phi: &ScalarField) -> HermitianField {
    let grid = *phi.grid();
    let dft = Dft::new(grid);
    let n = grid.dim();
    let np = grid.points_per_axis();
    let l = grid.period();
    let mut hat: Vec<Complex64> = phi.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft.forward(&mut hat);
    let wave = |k: usize| 2.0 * PI * dft.signed_frequency(k) as f64 / l;
    let first = |k: usize| if 2 * k == np { 0.0 } else { wave(k) };
    // second derivative ∂_a∂_b has symbol -κ_a κ_b
    let second = |a: usize, b: usize| -> Vec<f64> {
        let mut out: Vec<Complex64> = hat
            .iter()
            .enumerate()
            .map(|(p, &v)| {
                let ka = grid.coord(p, a);
                let kb = grid.coord(p, b);
                let s = if a == b { -wave(ka) * wave(ka) } else { -first(ka) * first(kb) };
                v * s
            })
            .collect();
        dft.inverse(&mut out);
        out.iter().map(|z| z.re).collect()
    };
    let mut d = vec![vec![Vec::new(); 2 * n]; 2 * n];
    for a in 0..2 * n {
        for b in a..2 * n {
            let v = second(a, b);
            d[b][a] = v.clone();
            d[a][b] = v;
        }
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); grid.len() * n * n];
    for p in 0..grid.len() {
        for i in 0..n {
            for j in 0..n {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                let re = 0.25 * (d[xi][xj][p] + d[yi][yj][p]);
                let im = 0.25 * (d[xi][yj][p] - d[yi][xj][p]);
                entries[(p * n + i) * n + j] = Complex64::new(re, im);
            }
        }
    }
    HermitianField::pointwise_unchecked(grid, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::complex_hessian;

    #[test]
    fn fft_matches_direct_sum() {
        for np in [4usize, 6, 10, 12, 14, 24] {
            let grid = TorusGrid::new(1, np, 1.0).unwrap();
            let dft = Dft::new(grid);
            let line: Vec<Complex64> =
                (0..np).map(|i| Complex64::new((i as f64 * 1.3).sin(), (i as f64 * 0.4).cos())).collect();
            let mut out = vec![Complex64::new(0.0, 0.0); np];
            fft_rec(&line, 1, np, &mut out, &dft.factors, &dft.twiddles, 1);
            for (k, o) in out.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, x) in line.iter().enumerate() {
                    let a = -2.0 * PI * (j * k) as f64 / np as f64;
                    acc += x * Complex64::new(a.cos(), a.sin());
                }
                assert!((acc - o).norm() < 1e-12, "N={np} k={k}");
            }
        }
    }

    #[test]
    fn round_trip() {
        let grid = TorusGrid::new(2, 6, 1.0).unwrap();
        let dft = Dft::new(grid);
        let orig: Vec<Complex64> =
            (0..grid.len()).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos())).collect();
        let mut v = orig.clone();
        dft.forward(&mut v);
        dft.inverse(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn symbol_matches_stencils() {
        let grid = TorusGrid::new(2, 6, 1.0).unwrap();
        let coeff = [
            Complex64::new(1.2, 0.0),
            Complex64::new(0.2, 0.3),
            Complex64::new(0.2, -0.3),
            Complex64::new(0.9, 0.0),
        ];
        let solver = ConstantCoefficientSolver::new(grid, &coeff);
        let u: Vec<f64> = (0..grid.len()).map(|i| ((i * 7919) % 23) as f64 / 23.0).collect();
        let field = ScalarField::new(grid, u.clone()).unwrap();
        let h = complex_hessian(&field);
        let direct: Vec<f64> = (0..grid.len())
            .map(|p| {
                let hp = h.at(p);
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += (coeff[j * 2 + i] * hp[i * 2 + j]).re;
                    }
                }
                acc
            })
            .collect();
        let spectral = solver.apply(&u);
        for (a, b) in direct.iter().zip(&spectral) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
        // solve inverts apply on the mean-zero part
        let back = solver.solve(&direct);
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        for (a, b) in back.iter().zip(&u) {
            assert!((a - (b - mean)).abs() < 1e-9);
        }
    }
}
