//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! output_dir = "out/flat"
//! threads = 4                    # optional; HESSIANLAB_THREADS overrides
//!
//! [problem]
//! n = 2
//! m = 2
//! points = 12                    # N, grid points per real axis
//! period = 1.0                   # L
//! q = 2.0
//! q_prime = 1.0
//! p = 1.0                        # entropy exponent in the uniformity table
//! background = { kind = "flat", kappa = 1.0 }
//! f = { kind = "manufactured", hessian_bound = 0.3, seed = 11 }
//!
//! [solver]                       # SolverConfig fields, all optional
//! t = 0.5
//!
//! [schedule]                     # continuation
//! start = 1.0
//! ratio = 0.5
//! stages = 12
//!
//! [experiment]                   # command-specific options
//! refinements = [12, 24]
//! ```
//!
//! Unknown keys anywhere are rejected with the key named.

use std::path::{Path, PathBuf};

use hessianlab_core::background::BackgroundData;
use hessianlab_core::generators::{manufactured_problem, Manufactured, RhsGenerator, TrigPolynomial};
use hessianlab_core::grid::{HermitianField, ScalarField, TorusGrid};
use hessianlab_core::hermitian::{HermitianMatrix, MAX_DIM};
use hessianlab_core::solver::{ContinuationSchedule, SolverConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub m: usize,
    pub points: usize,
    #[serde(default = "one")]
    pub period: f64,
    pub background: BackgroundSpec,
    pub f: FSpec,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default = "one")]
    pub q_prime: f64,
    #[serde(default = "one")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Real symmetric matrix as nested rows, or `{ re, im }` for Hermitian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Real(Vec<Vec<f64>>),
    Complex { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl MatrixSpec {
    fn build(&self, n: usize, name: &str) -> Result<HermitianMatrix> {
        let (re, im) = match self {
            MatrixSpec::Real(re) => (re, None),
            MatrixSpec::Complex { re, im } => (re, Some(im)),
        };
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(re) || im.is_some_and(|i| !square(i)) {
            return Err(Error::Config(format!("{name} must be a {n}×{n} matrix")));
        }
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                Complex64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
            })
            .collect();
        HermitianMatrix::from_entries(n, entries).map_err(|e| Error::Config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundSpec {
    /// `ω = I`, `χ = 0`, `χ̃ = κI`.
    Flat { kappa: f64 },
    /// Constant matrices.
    Constant { omega: MatrixSpec, chi: MatrixSpec, chi_tilde: MatrixSpec, kappa: f64 },
    /// `ω = I`, `χ̃ = κI`, `χ = c·I + i∂∂̄ψ` with `ψ` a seeded trigonometric
    /// polynomial whose complex Hessian has norm at most `hessian_bound ≤ c`.
    Potential {
        kappa: f64,
        chi_level: f64,
        hessian_bound: f64,
        #[serde(default = "default_mode")]
        max_mode: i32,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_mode() -> i32 {
    1
}

fn default_terms() -> usize {
    4
}

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Constant {
        value: f64,
    },
    Trig {
        amplitude: f64,
        #[serde(default = "default_mode")]
        max_mode: i32,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Bump {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        height: f64,
    },
    LqSample {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        q: Option<f64>,
        fraction: f64,
        cap: f64,
    },
    /// `f*` solved exactly by a seeded trigonometric `φ*` at `t` (default:
    /// the solver's `t` for `solve`, `0` for `continuation`).
    Manufactured {
        hessian_bound: f64,
        #[serde(default = "default_mode")]
        max_mode: i32,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        t: Option<f64>,
    },
    /// HLF1 scalar field.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub cone_margin: Option<f64>,
    pub damping: Option<f64>,
    pub forcing_cap: Option<f64>,
    pub linear_max_iter: Option<usize>,
    pub linear_restart: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "one")]
    pub start: f64,
    #[serde(default = "half")]
    pub ratio: f64,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Explicit decreasing `t` values; overrides start/ratio/stages.
    #[serde(default)]
    pub t_values: Option<Vec<f64>>,
    /// Mollify `f` per stage with `σ_i = h·2^{K−i}` (floor `h`).
    #[serde(default)]
    pub mollify: bool,
}

fn half() -> f64 {
    0.5
}

fn default_stages() -> usize {
    12
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { start: 1.0, ratio: 0.5, stages: 12, t_values: None, mollify: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `solve`: extra grid sizes for the manufactured error table.
    #[serde(default)]
    pub refinements: Vec<usize>,
    /// `stability`: perturbation scales.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// `stability`: perturbation direction (default: centered bump of width
    /// `0.15 L`, height 1).
    #[serde(default)]
    pub perturbation: Option<FSpec>,
    /// `stability`: Newton cap for the perturbed solves only (the base solve
    /// keeps `solver.max_newton`).
    #[serde(default)]
    pub pair_max_newton: Option<usize>,
    /// `verify`: synthetic families per iteration lemma.
    #[serde(default = "default_families")]
    pub lemma_families: usize,
    #[serde(default = "default_lemma_samples")]
    pub lemma_samples: usize,
    /// `verify`: viscosity test points (all when absent).
    #[serde(default)]
    pub viscosity_samples: Option<usize>,
    /// `verify`: add a positive spike to the solution before the viscosity test.
    #[serde(default)]
    pub inject_spike: bool,
    /// `verify`: sup amplitude of the second twin's initial guess.
    #[serde(default = "default_noise")]
    pub twin_noise: f64,
    /// `conecheck`: HLF1 potential (scalar) or form (Hermitian) to examine.
    #[serde(default)]
    pub field: Option<PathBuf>,
    /// Also write CSV slices of the final potential through the origin.
    #[serde(default)]
    pub slices: bool,
}

fn default_scales() -> Vec<f64> {
    (3..=8).map(|k| 2f64.powi(-k)).collect()
}

fn default_families() -> usize {
    100
}

fn default_lemma_samples() -> usize {
    400
}

fn default_noise() -> f64 {
    0.01
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            refinements: Vec::new(),
            scales: default_scales(),
            perturbation: None,
            pair_max_newton: None,
            lemma_families: default_families(),
            lemma_samples: default_lemma_samples(),
            viscosity_samples: None,
            inject_spike: false,
            twin_noise: default_noise(),
            field: None,
            slices: false,
        }
    }
}

fn finite_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_grid(n: usize, points: usize, period: f64) -> Result<()> {
    // validates sizes without allocating anything
    TorusGrid::new(n, points, period).map(|_| ()).map_err(|e| Error::Config(format!("problem: {e}")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every parameter; no field is allocated.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.n < 2 {
            return Err(Error::Config(format!("problem.n must be at least 2, got {}", p.n)));
        }
        if p.n > MAX_DIM {
            return Err(Error::Config(format!("problem.n must be at most {MAX_DIM}, got {}", p.n)));
        }
        if p.m == 0 || p.m > p.n {
            return Err(Error::Config(format!("problem.m must lie in 1..={}, got {}", p.n, p.m)));
        }
        finite_positive("problem.period", p.period)?;
        check_grid(p.n, p.points, p.period)?;
        if !(p.q > 1.0) || !p.q.is_finite() {
            return Err(Error::Config(format!("problem.q must exceed 1, got {}", p.q)));
        }
        finite_positive("problem.q_prime", p.q_prime)?;
        finite_positive("problem.p", p.p)?;
        match &p.background {
            BackgroundSpec::Flat { kappa } => nonnegative("background.kappa", *kappa)?,
            BackgroundSpec::Constant { omega, chi, chi_tilde, kappa } => {
                nonnegative("background.kappa", *kappa)?;
                omega.build(p.n, "background.omega")?;
                chi.build(p.n, "background.chi")?;
                chi_tilde.build(p.n, "background.chi_tilde")?;
            }
            BackgroundSpec::Potential { kappa, chi_level, hessian_bound, max_mode, terms, .. } => {
                nonnegative("background.kappa", *kappa)?;
                nonnegative("background.hessian_bound", *hessian_bound)?;
                if !(chi_level >= hessian_bound) {
                    return Err(Error::Config("background.chi_level must be at least hessian_bound".into()));
                }
                if *max_mode < 1 || *terms == 0 {
                    return Err(Error::Config("background.max_mode and terms must be positive".into()));
                }
            }
        }
        self.validate_f(&p.f, "problem.f")?;
        if let Some(pert) = &self.experiment.perturbation {
            self.validate_f(pert, "experiment.perturbation")?;
        }
        let s = self.solver_config(1.0);
        if let Some(t) = self.solver.t {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("solver.t must lie in (0, 1], got {t}")));
            }
        }
        s.validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        self.schedule().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        for &np in &self.experiment.refinements {
            check_grid(p.n, np, p.period)?;
        }
        if self.experiment.scales.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Config("experiment.scales must be finite and nonnegative".into()));
        }
        if self.experiment.pair_max_newton == Some(0) {
            return Err(Error::Config("experiment.pair_max_newton must be positive".into()));
        }
        if self.experiment.lemma_samples < 3 {
            return Err(Error::Config("experiment.lemma_samples must be at least 3".into()));
        }
        if !(self.experiment.twin_noise >= 0.0) {
            return Err(Error::Config("experiment.twin_noise must be nonnegative".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    fn validate_f(&self, f: &FSpec, name: &str) -> Result<()> {
        let n = self.problem.n;
        let center_ok = |c: &Option<Vec<f64>>| c.as_ref().is_none_or(|c| c.len() == 2 * n);
        match f {
            FSpec::Constant { value } if !value.is_finite() => {
                Err(Error::Config(format!("{name}.value must be finite")))
            }
            FSpec::Trig { amplitude, max_mode, terms, .. } => {
                nonnegative(&format!("{name}.amplitude"), *amplitude)?;
                if *max_mode < 1 || *terms == 0 {
                    return Err(Error::Config(format!("{name}: max_mode and terms must be positive")));
                }
                Ok(())
            }
            FSpec::Bump { center, width, height } => {
                if !center_ok(center) {
                    return Err(Error::Config(format!("{name}.center needs {} coordinates", 2 * n)));
                }
                finite_positive(&format!("{name}.width"), *width)?;
                if !height.is_finite() {
                    return Err(Error::Config(format!("{name}.height must be finite")));
                }
                Ok(())
            }
            FSpec::LqSample { center, q, fraction, cap } => {
                if !center_ok(center) {
                    return Err(Error::Config(format!("{name}.center needs {} coordinates", 2 * n)));
                }
                let q = q.unwrap_or(self.problem.q);
                if !(q > 1.0) || !(*fraction > 0.0 && *fraction < 1.0) || !(*cap > 1.0) {
                    return Err(Error::Config(format!("{name}: need q > 1, 0 < fraction < 1, cap > 1")));
                }
                Ok(())
            }
            FSpec::Manufactured { hessian_bound, max_mode, terms, t, .. } => {
                nonnegative(&format!("{name}.hessian_bound"), *hessian_bound)?;
                if *max_mode < 1 || *terms == 0 {
                    return Err(Error::Config(format!("{name}: max_mode and terms must be positive")));
                }
                if let Some(t) = t {
                    if !(*t >= 0.0 && *t <= 1.0) {
                        return Err(Error::Config(format!("{name}.t must lie in [0, 1]")));
                    }
                }
                Ok(())
            }
            FSpec::File { path } if path.as_os_str().is_empty() => {
                Err(Error::Config(format!("{name}.path is empty")))
            }
            _ => Ok(()),
        }
    }

    /// Solver settings; `default_t` applies when `solver.t` is absent.
    pub fn solver_config(&self, default_t: f64) -> SolverConfig {
        let s = &self.solver;
        let mut c = SolverConfig::new(self.problem.m, s.t.unwrap_or(default_t));
        if let Some(v) = s.newton_tol {
            c.newton_tol = v;
        }
        if let Some(v) = s.max_newton {
            c.max_newton = v;
        }
        if let Some(v) = s.cone_margin {
            c.cone_margin = v;
        }
        if let Some(v) = s.damping {
            c.damping = v;
        }
        if let Some(v) = s.forcing_cap {
            c.forcing_cap = v;
        }
        if let Some(v) = s.linear_max_iter {
            c.linear_max_iter = v;
        }
        if let Some(v) = s.linear_restart {
            c.linear_restart = v;
        }
        c
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule> {
        let s = &self.schedule;
        let sched = match &s.t_values {
            Some(t) => ContinuationSchedule::new(t.clone(), None)?,
            None => ContinuationSchedule::geometric(s.start, s.ratio, s.stages)?,
        };
        if s.mollify {
            Ok(sched.with_stage_sigmas(self.problem.period / self.problem.points as f64)?)
        } else {
            Ok(sched)
        }
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        self.grid_with(self.problem.points)
    }

    pub fn grid_with(&self, points: usize) -> Result<TorusGrid> {
        Ok(TorusGrid::new(self.problem.n, points, self.problem.period)?)
    }

    pub fn background(&self, grid: TorusGrid) -> Result<BackgroundData> {
        let p = &self.problem;
        let n = p.n;
        let bg = match &p.background {
            BackgroundSpec::Flat { kappa } => BackgroundData::flat_kappa(grid, *kappa, p.m)?,
            BackgroundSpec::Constant { omega, chi, chi_tilde, kappa } => BackgroundData::constant(
                grid,
                omega.build(n, "background.omega")?,
                chi.build(n, "background.chi")?,
                chi_tilde.build(n, "background.chi_tilde")?,
                *kappa,
                p.m,
            )?,
            BackgroundSpec::Potential { kappa, chi_level, hessian_bound, max_mode, terms, seed } => {
                let id = HermitianMatrix::identity(n)?;
                let psi = TrigPolynomial::random(
                    n,
                    p.period,
                    *max_mode,
                    *terms,
                    *hessian_bound,
                    seed.unwrap_or(self.seed),
                )?;
                BackgroundData::new(
                    HermitianField::constant(grid, id.clone())?,
                    HermitianField::constant(grid, id.scale(*chi_level))?.add(&psi.sample_complex_hessian(grid)),
                    HermitianField::constant(grid, id.scale(*kappa))?,
                    *kappa,
                    p.m,
                )?
            }
        };
        Ok(bg)
    }

    /// Right-hand side on `bg`'s grid; `default_t` is the manufactured `t`
    /// when the spec leaves it open. Manufactured data also returns `φ*`.
    pub fn rhs(&self, spec: &FSpec, bg: &BackgroundData, default_t: f64) -> Result<(ScalarField, Option<Manufactured>)> {
        let grid = *bg.grid();
        let n = self.problem.n;
        let l = self.problem.period;
        let mid = || vec![0.5 * l; 2 * n];
        let field = match spec {
            FSpec::Constant { value } => RhsGenerator::Constant { value: *value }.generate(grid)?,
            FSpec::Trig { amplitude, max_mode, terms, seed } => RhsGenerator::Trig {
                amplitude: *amplitude,
                max_mode: *max_mode,
                terms: *terms,
                seed: seed.unwrap_or(self.seed),
            }
            .generate(grid)?,
            FSpec::Bump { center, width, height } => RhsGenerator::GaussianBump {
                center: center.clone().unwrap_or_else(mid),
                width: *width,
                height: *height,
            }
            .generate(grid)?,
            FSpec::LqSample { center, q, fraction, cap } => RhsGenerator::LqSample {
                center: center.clone().unwrap_or_else(mid),
                q: q.unwrap_or(self.problem.q),
                fraction: *fraction,
                cap: *cap,
            }
            .generate(grid)?,
            FSpec::Manufactured { hessian_bound, max_mode, terms, seed, t } => {
                let poly = TrigPolynomial::random(n, l, *max_mode, *terms, *hessian_bound, seed.unwrap_or(self.seed))?;
                let man = manufactured_problem(bg, t.unwrap_or(default_t), poly, self.problem.m)?;
                return Ok((man.f_star.clone(), Some(man)));
            }
            FSpec::File { path } => {
                let f = io::read_scalar(path)?;
                if *f.grid() != grid {
                    return Err(Error::Config(format!("{}: grid differs from the configured problem", path.display())));
                }
                f
            }
        };
        Ok((field, None))
    }

    /// Worker threads: `HESSIANLAB_THREADS`, then `threads`, then all cores.
    pub fn thread_count(&self) -> Result<usize> {
        match std::env::var("HESSIANLAB_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(k) if k > 0 => Ok(k),
                _ => Err(Error::Config(format!("HESSIANLAB_THREADS must be a positive integer, got {v:?}"))),
            },
            Err(_) => Ok(self
                .threads
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |k| k.get()))),
        }
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
output_dir = "out"
[problem]
n = 2
m = 2
points = 8
background = { kind = "flat", kappa = 1.0 }
f = { kind = "constant", value = 0.0 }
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.problem.period, 1.0);
        assert_eq!(cfg.schedule().unwrap().len(), 12);
        assert_eq!(cfg.experiment.scales.len(), 6);
        assert_eq!(cfg.solver_config(0.5).t, 0.5);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = BASE.replace("points = 8", "points = 8\npionts = 9");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("pionts"), "{err}");
        let text = BASE.replace("value = 0.0", "value = 0.0, colour = 1");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [("n = 2", "n = 1"), ("m = 2", "m = 3"), ("points = 8", "points = 7")] {
            let text = BASE.replace(from, to);
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{to}");
        }
        let text = format!("{BASE}\n[solver]\nt = 0.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn constant_matrices_and_potential_backgrounds() {
        let text = BASE.replace(
            r#"background = { kind = "flat", kappa = 1.0 }"#,
            r#"background = { kind = "constant", kappa = 0.5, omega = [[1.0, 0.0], [0.0, 2.0]], chi = { re = [[0.2, 0.1], [0.1, 0.2]], im = [[0.0, 0.05], [-0.05, 0.0]] }, chi_tilde = [[0.5, 0.0], [0.0, 1.0]] }"#,
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let bg = cfg.background(cfg.grid().unwrap()).unwrap();
        assert!(bg.is_constant_coefficient());
        let text = BASE.replace(
            r#"background = { kind = "flat", kappa = 1.0 }"#,
            r#"background = { kind = "potential", kappa = 1.0, chi_level = 0.3, hessian_bound = 0.2 }"#,
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert!(!cfg.background(cfg.grid().unwrap()).unwrap().is_constant_coefficient());
    }
}
