//! Numerical kernel for complex Hessian equations
//! `(χ + i∂∂̄φ)^m ∧ ω^{n−m} = e^{mf} ω^n` on flat complex tori.
//!
//! The crate is `no_std` (with `alloc`) and free of IO. It provides
//!
//! * [`algebra`] and [`hermitian`]: elementary symmetric functions, the cones
//!   `Γ^m`, their derivatives and classical inequalities, and generalized
//!   Hermitian eigenvalues;
//! * [`grid`]: periodic grids, the discrete complex Hessian, integration,
//!   norms and mollification;
//! * [`solver`]: the Newton/continuation solver for the regularized family and
//!   the decreasing-sequence construction of the degenerate limit;
//! * [`estimates`]: iteration lemmas, stability, viscosity, uniqueness-energy
//!   and Laplacian-monitor checks;
//! * [`generators`]: trigonometric polynomials, built-in right-hand sides and
//!   manufactured problems.

#![no_std]
// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the formulas in the numerical kernels
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod algebra;
pub mod background;
pub mod error;
pub mod estimates;
pub mod generators;
pub mod grid;
pub mod hermitian;
pub mod solver;
pub mod sum;

pub use error::{Error, Result};
