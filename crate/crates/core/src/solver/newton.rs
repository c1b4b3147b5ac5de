use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::{compatibility_constant, Clock, Evaluation, NoClock, Problem, SolveReport, SolverConfig, SolverState, StageRecord};
use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{ConstantCoefficientSolver, Dft, ScalarField};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Smallest step factor the line search tries.
const STEP_FLOOR: f64 = 1.0 / 1048576.0;
/// Lower clamp of the forcing term, below which roundoff dominates.
const FORCING_FLOOR: f64 = 1e-10;

/// What one Newton step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Accepted step factor.
    pub alpha: f64,
    pub halvings: u32,
    pub linear_iterations: usize,
    /// Relative 2-norm residual of the linear solve.
    pub linear_residual: f64,
    /// `sup |α δφ|`.
    pub step_sup: f64,
    /// `α δb`.
    pub delta_b: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    pub margin_after: f64,
}

struct Iterate {
    phi: Vec<f64>,
    b: f64,
    eval: Evaluation,
    residual_sup: f64,
}

/// Newton driver at fixed `(t, f, m)`, reusing transform tables across steps.
struct Newton<'a> {
    problem: Problem<'a>,
    precond: ConstantCoefficientSolver,
    config: &'a SolverConfig,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Restarted generalized conjugate residual for `A y = rhs`, stopping at
/// `‖r‖₂ ≤ rel_tol ‖rhs‖₂`. Returns `(y, iterations, relative residual)`.
fn gcr<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
    restart: usize,
) -> (Vec<f64>, usize, f64) {
    let len = rhs.len();
    let mut y = vec![0.0; len];
    let mut r = rhs.to_vec();
    let norm0 = dot(rhs, rhs).sqrt();
    if norm0 == 0.0 {
        return (y, 0, 0.0);
    }
    let mut ps: Vec<Vec<f64>> = Vec::with_capacity(restart);
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(restart);
    let mut iters = 0;
    let mut rel = 1.0;
    while iters < max_iter {
        rel = dot(&r, &r).sqrt() / norm0;
        if rel <= rel_tol {
            break;
        }
        let mut p = r.clone();
        let mut q = vec![0.0; len];
        apply(&p, &mut q);
        iters += 1;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (pj, qj) in ps.iter().zip(&qs) {
                let beta = dot(&q, qj);
                axpy(&mut q, -beta, qj);
                axpy(&mut p, -beta, pj);
            }
        }
        let qn = dot(&q, &q).sqrt();
        if !(qn > 0.0) || !qn.is_finite() {
            break;
        }
        for v in q.iter_mut() {
            *v /= qn;
        }
        for v in p.iter_mut() {
            *v /= qn;
        }
        let alpha = dot(&r, &q);
        axpy(&mut y, alpha, &p);
        axpy(&mut r, -alpha, &q);
        if ps.len() + 1 == restart {
            ps.clear();
            qs.clear();
        } else {
            ps.push(p);
            qs.push(q);
        }
    }
    if iters == max_iter {
        rel = dot(&r, &r).sqrt() / norm0;
    }
    (y, iters, rel)
}

impl<'a> Newton<'a> {
    fn new(problem: Problem<'a>, config: &'a SolverConfig) -> Self {
        let grid = *problem.grid();
        let n = grid.dim();
        let mut ident = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            ident[i * n + i] = Complex64::new(1.0, 0.0);
        }
        let precond = ConstantCoefficientSolver::with_dft(Dft::new(grid), &ident);
        Newton { problem, precond, config }
    }

    /// Evaluates at `(phi, b)`, moves `b` so the residual has zero mean, and
    /// normalizes `max φ = 0`.
    fn settle(&self, mut phi: Vec<f64>, b: f64) -> Result<Iterate> {
        let mut eval = self.problem.evaluate(&phi, b, true)?;
        let mean = self.problem.volume_mean(&eval.residual);
        let b = b + mean / self.problem.m as f64;
        let mut residual_sup: f64 = 0.0;
        for r in eval.residual.iter_mut() {
            *r -= mean;
            residual_sup = residual_sup.max(r.abs());
        }
        let top = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in phi.iter_mut() {
            *v -= top;
        }
        if !residual_sup.is_finite() {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: residual_sup,
                reason: "non-finite residual".to_string(),
            });
        }
        Ok(Iterate { phi, b, eval, residual_sup })
    }

    fn start(&self, phi: Vec<f64>, b: f64) -> Result<Iterate> {
        let it = self.settle(phi, b)?;
        if it.eval.margin_min < self.config.cone_margin {
            return Err(Error::OutsideCone { worst_margin: it.eval.margin_min, point: None });
        }
        Ok(it)
    }

    fn step(&mut self, cur: &Iterate, iterations: usize) -> Result<(Iterate, StepDiagnostics)> {
        let grid = *self.problem.grid();
        let len = grid.len();
        let n = grid.dim();
        let nn = n * n;
        let mf = self.problem.m as f64;
        let coeff = &cur.eval.coeff;
        let mut mean_coeff = vec![Complex64::new(0.0, 0.0); nn];
        for block in coeff.chunks_exact(nn) {
            for (acc, v) in mean_coeff.iter_mut().zip(block) {
                *acc += v;
            }
        }
        for v in mean_coeff.iter_mut() {
            *v /= len as f64;
        }
        self.precond.set_coefficient(&mean_coeff);
        let precond = &self.precond;
        let problem = &self.problem;
        // M g = (L̄⁻¹(g − ḡ), −ḡ/m)
        let apply_m = |g: &[f64]| -> (Vec<f64>, f64) {
            let mean = g.iter().sum::<f64>() / len as f64;
            (precond.solve(g), -mean / mf)
        };
        let apply = |y: &[f64], out: &mut [f64]| {
            let (dphi, db) = apply_m(y);
            problem.apply_jacobian(coeff, &dphi, out);
            for o in out.iter_mut() {
                *o -= mf * db;
            }
        };
        let rhs: Vec<f64> = cur.eval.residual.iter().map(|r| -r).collect();
        let eta = cur.residual_sup.clamp(FORCING_FLOOR, self.config.forcing_cap);
        let (y, linear_iterations, linear_residual) =
            gcr(apply, &rhs, eta, self.config.linear_max_iter, self.config.linear_restart);
        let (dphi, db) = apply_m(&y);

        let mut alpha = self.config.damping;
        let mut halvings = 0;
        let mut last_margin;
        loop {
            let trial: Vec<f64> = cur.phi.iter().zip(&dphi).map(|(p, d)| p + alpha * d).collect();
            match self.settle(trial, cur.b + alpha * db) {
                Ok(next) if next.eval.margin_min >= self.config.cone_margin => {
                    let step_sup = dphi.iter().fold(0.0f64, |m, d| m.max((alpha * d).abs()));
                    let diag = StepDiagnostics {
                        alpha,
                        halvings,
                        linear_iterations,
                        linear_residual,
                        step_sup,
                        delta_b: alpha * db,
                        residual_before: cur.residual_sup,
                        residual_after: next.residual_sup,
                        margin_after: next.eval.margin_min,
                    };
                    return Ok((next, diag));
                }
                Ok(next) => last_margin = next.eval.margin_min,
                Err(Error::OutsideCone { worst_margin, .. }) => last_margin = worst_margin,
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
            halvings += 1;
            if alpha < STEP_FLOOR {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: cur.residual_sup,
                    reason: alloc::format!(
                        "line search reached the step floor 2^-20 (worst margin {last_margin:e} < {:e})",
                        self.config.cone_margin
                    ),
                });
            }
        }
    }

    fn state(&self, it: &Iterate, iters: usize) -> SolverState {
        SolverState {
            phi: ScalarField::new(*self.problem.grid(), it.phi.clone()).expect("iterate is finite"),
            b: it.b,
            residual_sup: it.residual_sup,
            cone_margin_min: it.eval.margin_min,
            newton_iters: iters,
        }
    }
}

fn check_inputs(bg: &BackgroundData, f: &ScalarField, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    if f.grid() != bg.grid() {
        return Err(Error::Dimension("f and background live on different grids".into()));
    }
    Ok(())
}

/// One cone-safeguarded inexact Newton step from `state` at
/// `(config.t, f, config.m)`.
pub fn newton_step(
    state: &SolverState,
    bg: &BackgroundData,
    f: &ScalarField,
    config: &SolverConfig,
) -> Result<(SolverState, StepDiagnostics)> {
    check_inputs(bg, f, config)?;
    let problem = Problem::new(bg, config.t, f, config.m)?;
    let mut newton = Newton::new(problem, config);
    let cur = newton.start(state.phi.values().to_vec(), state.b)?;
    let (next, diag) = newton.step(&cur, state.newton_iters)?;
    Ok((newton.state(&next, state.newton_iters + 1), diag))
}

/// Solves from `φ = 0` to `sup |residual| < newton_tol`.
pub fn solve_nondegenerate(
    bg: &BackgroundData,
    f: &ScalarField,
    config: &SolverConfig,
) -> Result<(SolverState, SolveReport)> {
    solve_with_initial(bg, f, config, None, &NoClock)
}

/// As [`solve_nondegenerate`], optionally warm-started from `initial`.
pub fn solve_with_initial(
    bg: &BackgroundData,
    f: &ScalarField,
    config: &SolverConfig,
    initial: Option<&ScalarField>,
    clock: &dyn Clock,
) -> Result<(SolverState, SolveReport)> {
    check_inputs(bg, f, config)?;
    let t0 = clock.seconds();
    let b_compat = compatibility_constant(bg, config.t, f, config.m)?;
    let (state, history) = run(bg, f, config, initial)?;
    let record = StageRecord {
        t: config.t,
        b: state.b,
        b_compat,
        residual_history: history,
        sup_phi: state.phi.max(),
        inf_phi: state.phi.min(),
        margin_min: state.cone_margin_min,
        iters: state.newton_iters,
        seconds: clock.seconds() - t0,
        sigma: 0.0,
        f_shift: 0.0,
        restarted: false,
        sup_increment: None,
    };
    Ok((state, SolveReport { stages: vec![record], ..SolveReport::default() }))
}

/// Newton loop; returns the converged state and the residual history.
pub(crate) fn run(
    bg: &BackgroundData,
    f: &ScalarField,
    config: &SolverConfig,
    initial: Option<&ScalarField>,
) -> Result<(SolverState, Vec<f64>)> {
    let problem = Problem::new(bg, config.t, f, config.m)?;
    let grid = *bg.grid();
    let phi0 = match initial {
        Some(p) => {
            if p.grid() != &grid {
                return Err(Error::Dimension("initial guess lives on a different grid".into()));
            }
            p.values().to_vec()
        }
        None => vec![0.0; grid.len()],
    };
    let mut newton = Newton::new(problem, config);
    let mut cur = newton.start(phi0, 0.0)?;
    let mut history = vec![cur.residual_sup];
    let mut iters = 0;
    while cur.residual_sup >= config.newton_tol {
        if iters == config.max_newton {
            return Err(Error::NonConvergence {
                iterations: iters,
                residual: cur.residual_sup,
                reason: alloc::format!("iteration cap {} reached", config.max_newton),
            });
        }
        let (next, _) = newton.step(&cur, iters)?;
        iters += 1;
        cur = next;
        history.push(cur.residual_sup);
    }
    Ok((newton.state(&cur, iters), history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcr_solves_small_nonsymmetric_system() {
        // A = [[4,1],[−2,3]]
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = 4.0 * x[0] + x[1];
            out[1] = -2.0 * x[0] + 3.0 * x[1];
        };
        let (y, iters, rel) = gcr(apply, &[1.0, 2.0], 1e-14, 10, 5);
        assert!(iters <= 2);
        assert!(rel < 1e-12);
        assert!((4.0 * y[0] + y[1] - 1.0).abs() < 1e-12);
        assert!((-2.0 * y[0] + 3.0 * y[1] - 2.0).abs() < 1e-12);
    }
}
