//! Background geometry `(ω, χ, χ̃, κ)` of the equation on the torus.

use crate::algebra::worst_margin;
use crate::error::{Error, Result};
use crate::grid::{complex_hessian, eigen_field, HermitianField, ScalarField, TorusGrid};
use crate::hermitian::HermitianMatrix;

const OMEGA_MARGIN: f64 = 1e-8;
const SEMIPOSITIVE_TOL: f64 = 1e-12;

/// The Kähler metric `ω`, the closed form `χ` (with `λ(χ) ∈ Γ̄^m`), the
/// semipositive form `χ̃` with `χ̃ ≥ κω`, and the volume density `det ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundData {
    pub omega: HermitianField,
    pub chi: HermitianField,
    pub chi_tilde: HermitianField,
    pub kappa: f64,
    volume: ScalarField,
}

impl BackgroundData {
    /// Assembles and validates a background for the degree-`m` equation.
    pub fn new(
        omega: HermitianField,
        chi: HermitianField,
        chi_tilde: HermitianField,
        kappa: f64,
        m: usize,
    ) -> Result<Self> {
        let grid = *omega.grid();
        if *chi.grid() != grid || *chi_tilde.grid() != grid {
            return Err(Error::Dimension("background fields live on different grids".into()));
        }
        if !(kappa >= 0.0) {
            return Err(Error::Config("kappa must be nonnegative".into()));
        }
        if m == 0 || m > grid.dim() {
            return Err(Error::Config(alloc::format!("degree m={m} outside 1..={}", grid.dim())));
        }
        // ω positive definite with margin
        let ident = HermitianField::constant(grid, HermitianMatrix::identity(grid.dim())?)?;
        let omega_eigs = eigen_field(&omega, &ident)?;
        for p in 0..grid.len() {
            let low = omega_eigs.at(p)[grid.dim() - 1];
            if low < OMEGA_MARGIN {
                return Err(Error::SingularMetric { min_eigenvalue: low, point: Some(p) });
            }
        }
        let chi_eigs = eigen_field(&chi, &omega)?;
        for p in 0..grid.len() {
            let w = worst_margin(chi_eigs.at(p), m);
            if w < -SEMIPOSITIVE_TOL {
                return Err(Error::OutsideCone { worst_margin: w, point: Some(p) });
            }
        }
        let tilde_eigs = eigen_field(&chi_tilde, &omega)?;
        for p in 0..grid.len() {
            let low = tilde_eigs.at(p)[grid.dim() - 1];
            if low < kappa - SEMIPOSITIVE_TOL * (1.0 + kappa) {
                return Err(Error::Config(alloc::format!(
                    "chi_tilde fails chi_tilde ≥ kappa·omega at grid point {p} (lowest relative eigenvalue {low:e}, kappa {kappa})"
                )));
            }
        }
        let volume = omega.det_field();
        Ok(BackgroundData { omega, chi, chi_tilde, kappa, volume })
    }

    /// Constant-coefficient background.
    pub fn constant(
        grid: TorusGrid,
        omega: HermitianMatrix,
        chi: HermitianMatrix,
        chi_tilde: HermitianMatrix,
        kappa: f64,
        m: usize,
    ) -> Result<Self> {
        Self::new(
            HermitianField::constant(grid, omega)?,
            HermitianField::constant(grid, chi)?,
            HermitianField::constant(grid, chi_tilde)?,
            kappa,
            m,
        )
    }

    /// Flat metric, `χ = 0`, `χ̃ = κω`.
    pub fn flat_kappa(grid: TorusGrid, kappa: f64, m: usize) -> Result<Self> {
        let n = grid.dim();
        let id = HermitianMatrix::identity(n)?;
        Self::constant(grid, id.clone(), HermitianMatrix::zeros(n)?, id.scale(kappa), kappa, m)
    }

    /// Replaces `χ` by `χ₀ + i∂∂̄ψ`, which keeps it closed on the torus.
    pub fn with_chi_potential(
        omega: HermitianField,
        chi0: HermitianField,
        potential: &ScalarField,
        chi_tilde: HermitianField,
        kappa: f64,
        m: usize,
    ) -> Result<Self> {
        let chi = chi0.add(&complex_hessian(potential));
        Self::new(omega, chi, chi_tilde, kappa, m)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.omega.grid()
    }

    /// `det ω` at every point; `∫ g dV` is `integrate(g, volume)`.
    pub fn volume(&self) -> &ScalarField {
        &self.volume
    }

    /// `χ + χ̃ + tω`.
    pub fn base_form(&self, t: f64) -> HermitianField {
        self.chi.add(&self.chi_tilde).add(&self.omega.scale(t))
    }

    /// True when `ω`, `χ` and `χ̃` are all constant.
    pub fn is_constant_coefficient(&self) -> bool {
        self.omega.is_constant() && self.chi.is_constant() && self.chi_tilde.is_constant()
    }
}
