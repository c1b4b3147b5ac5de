//! Uniform periodic grids on the flat torus `ℂⁿ / (Lℤ)^{2n}` and the scalar,
//! Hermitian and eigenvalue fields living on them.
//!
//! Points are stored row-major in the real axis order
//! `(x_1, y_1, …, x_n, y_n)`: axis `2k` is `x_{k+1}`, axis `2k+1` is `y_{k+1}`,
//! and axis 0 varies slowest.

mod dft;
mod ops;

pub use dft::{spectral_complex_hessian, ConstantCoefficientSolver, Dft};
pub use ops::{
    complex_hessian, complex_hessian_at, eigen_field, entropy_functional, gradient_at, integrate,
    log_entropy_functional, lp_norm, mollify, Norm,
};

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, MAX_DIM};

/// Default cap on `N^{2n}`.
pub const DEFAULT_POINT_BUDGET: usize = 2_000_000;

/// A uniform periodic grid with `N` points along each of the `2n` real axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    n: usize,
    points_per_axis: usize,
    period: f64,
    total: usize,
    strides: [usize; 2 * MAX_DIM],
}

impl TorusGrid {
    pub fn new(n: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        Self::with_budget(n, points_per_axis, period, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(n: usize, points_per_axis: usize, period: f64, budget: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::Dimension(alloc::format!("complex dimension {n} outside 1..={MAX_DIM}")));
        }
        if points_per_axis < 4 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::Config(alloc::format!(
                "points per axis must be even and at least 4, got {points_per_axis}"
            )));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Config("period must be positive".into()));
        }
        let mut total: usize = 1;
        for _ in 0..(2 * n) {
            total = total
                .checked_mul(points_per_axis)
                .filter(|&t| t <= budget)
                .ok_or_else(|| {
                    Error::Config(alloc::format!(
                        "grid {points_per_axis}^{} exceeds the point budget {budget}",
                        2 * n
                    ))
                })?;
        }
        let mut strides = [0usize; 2 * MAX_DIM];
        let mut s = 1;
        for a in (0..2 * n).rev() {
            strides[a] = s;
            s *= points_per_axis;
        }
        Ok(TorusGrid { n, points_per_axis, period, total, strides })
    }

    /// Complex dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Volume element of one cell, `h^{2n}`.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        (0..self.axes()).fold(1.0, |acc, _| acc * h)
    }

    /// Stride of a real axis in the flat index.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Integer coordinate of `point` along `axis`.
    pub fn coord(&self, point: usize, axis: usize) -> usize {
        (point / self.stride(axis)) % self.points_per_axis
    }

    /// All integer coordinates of a point, axis order.
    pub fn coords(&self, point: usize) -> [usize; 2 * MAX_DIM] {
        let mut c = [0usize; 2 * MAX_DIM];
        let mut rest = point;
        for a in (0..self.axes()).rev() {
            c[a] = rest % self.points_per_axis;
            rest /= self.points_per_axis;
        }
        c
    }

    /// Physical coordinates `(x_1, y_1, …)` of a point.
    pub fn position(&self, point: usize) -> [f64; 2 * MAX_DIM] {
        let c = self.coords(point);
        let h = self.spacing();
        let mut x = [0.0; 2 * MAX_DIM];
        for a in 0..self.axes() {
            x[a] = c[a] as f64 * h;
        }
        x
    }

    /// Index of the neighbour `steps` cells away along `axis` (periodic).
    #[inline]
    pub fn shift(&self, point: usize, axis: usize, steps: isize) -> usize {
        let stride = self.stride(axis);
        let np = self.points_per_axis as isize;
        let c = ((point / stride) % self.points_per_axis) as isize;
        let target = (c + steps).rem_euclid(np);
        (point as isize + (target - c) * stride as isize) as usize
    }
}

/// A real value at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Dimension(alloc::format!(
                "field has {} values for a grid of {} points",
                data.len(),
                grid.len()
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(alloc::format!("non-finite field value at grid point {p}")));
        }
        Ok(ScalarField { grid, data })
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        ScalarField { grid, data: vec![value; grid.len()] }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the physical position of every point.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: TorusGrid, f: F) -> Self {
        let axes = grid.axes();
        let data = (0..grid.len()).map(|p| f(&grid.position(p)[..axes])).collect();
        ScalarField { grid, data }
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn max(&self) -> f64 {
        crate::sum::max_of(&self.data)
    }

    pub fn min(&self) -> f64 {
        crate::sum::min_of(&self.data)
    }

    /// Unweighted grid mean (pairwise summation).
    pub fn mean(&self) -> f64 {
        crate::sum::pairwise_sum(&self.data) / self.data.len() as f64
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        ScalarField { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }
}

/// A Hermitian matrix at every grid point, either constant or pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    grid: TorusGrid,
    repr: HermitianRepr,
}

#[derive(Debug, Clone, PartialEq)]
enum HermitianRepr {
    Constant(HermitianMatrix),
    Pointwise(Vec<Complex64>),
}

impl HermitianField {
    pub fn constant(grid: TorusGrid, matrix: HermitianMatrix) -> Result<Self> {
        if matrix.dim() != grid.dim() {
            return Err(Error::Dimension("matrix size differs from grid dimension".into()));
        }
        Ok(HermitianField { grid, repr: HermitianRepr::Constant(matrix) })
    }

    /// Pointwise field from `n²` row-major entries per point, symmetrized on
    /// write.
    pub fn pointwise(grid: TorusGrid, mut entries: Vec<Complex64>) -> Result<Self> {
        let n = grid.dim();
        if entries.len() != grid.len() * n * n {
            return Err(Error::Dimension("Hermitian field payload has the wrong length".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite Hermitian field entry".into()));
        }
        for block in entries.chunks_exact_mut(n * n) {
            symmetrize_block(block, n);
        }
        Ok(HermitianField { grid, repr: HermitianRepr::Pointwise(entries) })
    }

    pub(crate) fn pointwise_unchecked(grid: TorusGrid, entries: Vec<Complex64>) -> Self {
        HermitianField { grid, repr: HermitianRepr::Pointwise(entries) }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.repr, HermitianRepr::Constant(_))
    }

    pub fn as_constant(&self) -> Option<&HermitianMatrix> {
        match &self.repr {
            HermitianRepr::Constant(m) => Some(m),
            HermitianRepr::Pointwise(_) => None,
        }
    }

    /// Row-major entries at a point.
    #[inline]
    pub fn at(&self, point: usize) -> &[Complex64] {
        match &self.repr {
            HermitianRepr::Constant(m) => m.entries(),
            HermitianRepr::Pointwise(v) => {
                let nn = self.grid.dim() * self.grid.dim();
                &v[point * nn..(point + 1) * nn]
            }
        }
    }

    pub fn matrix_at(&self, point: usize) -> HermitianMatrix {
        HermitianMatrix::from_raw(self.grid.dim(), self.at(point).to_vec())
    }

    /// Flattened entries for every point (expands constant fields).
    pub fn to_entries(&self) -> Vec<Complex64> {
        let nn = self.grid.dim() * self.grid.dim();
        let mut out = Vec::with_capacity(self.grid.len() * nn);
        for p in 0..self.grid.len() {
            out.extend_from_slice(self.at(p));
        }
        out
    }

    /// Pointwise sum; stays constant when both operands are.
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        match (&self.repr, &other.repr) {
            (HermitianRepr::Constant(a), HermitianRepr::Constant(b)) => {
                HermitianField { grid: self.grid, repr: HermitianRepr::Constant(a.add(b)) }
            }
            _ => {
                let nn = self.grid.dim() * self.grid.dim();
                let mut out = Vec::with_capacity(self.grid.len() * nn);
                for p in 0..self.grid.len() {
                    out.extend(self.at(p).iter().zip(other.at(p)).map(|(a, b)| a + b));
                }
                HermitianField::pointwise_unchecked(self.grid, out)
            }
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match &self.repr {
            HermitianRepr::Constant(a) => {
                HermitianField { grid: self.grid, repr: HermitianRepr::Constant(a.scale(s)) }
            }
            HermitianRepr::Pointwise(v) => {
                HermitianField::pointwise_unchecked(self.grid, v.iter().map(|z| z * s).collect())
            }
        }
    }

    /// Real part of entry `(i, j)` as a scalar field.
    pub fn entry_field(&self, i: usize, j: usize) -> (ScalarField, ScalarField) {
        let n = self.grid.dim();
        let re = (0..self.grid.len()).map(|p| self.at(p)[i * n + j].re).collect();
        let im = (0..self.grid.len()).map(|p| self.at(p)[i * n + j].im).collect();
        (
            ScalarField::from_vec_unchecked(self.grid, re),
            ScalarField::from_vec_unchecked(self.grid, im),
        )
    }

    /// `tr(A)` pointwise.
    pub fn trace_field(&self) -> ScalarField {
        let n = self.grid.dim();
        let data = (0..self.grid.len())
            .map(|p| {
                let a = self.at(p);
                (0..n).map(|i| a[i * n + i].re).sum()
            })
            .collect();
        ScalarField::from_vec_unchecked(self.grid, data)
    }

    /// `det(A)` pointwise (used for the volume form `ω^n / n!`).
    pub fn det_field(&self) -> ScalarField {
        match &self.repr {
            HermitianRepr::Constant(m) => ScalarField::constant(self.grid, m.det()),
            HermitianRepr::Pointwise(_) => {
                let data = (0..self.grid.len()).map(|p| self.matrix_at(p).det()).collect();
                ScalarField::from_vec_unchecked(self.grid, data)
            }
        }
    }
}

fn symmetrize_block(block: &mut [Complex64], n: usize) {
    for i in 0..n {
        block[i * n + i].im = 0.0;
        for j in (i + 1)..n {
            let avg = (block[i * n + j] + block[j * n + i].conj()) * 0.5;
            block[i * n + j] = avg;
            block[j * n + i] = avg.conj();
        }
    }
}

/// An eigenvalue tuple at every grid point, stored `n` values per point.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl EigenField {
    pub(crate) fn new(grid: TorusGrid, values: Vec<f64>) -> Self {
        EigenField { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, point: usize) -> &[f64] {
        let n = self.grid.dim();
        &self.values[point * n..(point + 1) * n]
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise worst cone margin `min_k S_k / C(n,k)`, `k ≤ m`.
    pub fn worst_margins(&self, m: usize) -> ScalarField {
        let data = (0..self.grid.len()).map(|p| crate::algebra::worst_margin(self.at(p), m)).collect();
        ScalarField::from_vec_unchecked(self.grid, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(2, 7, 1.0).is_err());
        assert!(TorusGrid::new(2, 2, 1.0).is_err());
        assert!(TorusGrid::new(2, 8, 0.0).is_err());
        assert!(TorusGrid::new(3, 10, 1.0).is_ok());
        assert!(TorusGrid::new(3, 12, 1.0).is_err());
        // 40^4 = 2.56e6 exceeds the default budget
        assert!(TorusGrid::new(2, 40, 1.0).is_err());
    }

    #[test]
    fn shifts_wrap_periodically() {
        let g = TorusGrid::new(2, 6, 1.0).unwrap();
        let p = 5; // last point along axis 3
        assert_eq!(g.coord(p, 3), 5);
        assert_eq!(g.shift(p, 3, 1), 0);
        assert_eq!(g.shift(0, 0, -1), 5 * g.stride(0));
        let q = g.shift(g.shift(p, 1, 2), 1, -2);
        assert_eq!(q, p);
    }

    #[test]
    fn row_major_axis_order() {
        let g = TorusGrid::new(2, 4, 1.0).unwrap();
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(3), 1);
        let c = g.coords(64 + 2);
        assert_eq!(&c[..4], &[1, 0, 0, 2]);
    }
}
