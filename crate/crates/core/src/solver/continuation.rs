use alloc::string::ToString;
use alloc::vec::Vec;

use super::newton::run;
use super::{
    compatibility_constant, integral_sm, log_integral_exp, Clock, SolveReport, SolverConfig, SolverState,
    StageRecord,
};
use crate::algebra::binom;
use crate::background::BackgroundData;
use crate::error::{Error, Result};
use crate::grid::{integrate, mollify, ScalarField};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

/// Relative slack of the two-sided bracket on `V_t / e^{n b_t}`.
pub const BRACKET_SLACK: f64 = 1e-9;

/// Decreasing `t` values, optionally with a mollification width per stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSchedule {
    t_values: Vec<f64>,
    sigmas: Option<Vec<f64>>,
}

impl ContinuationSchedule {
    pub fn new(t_values: Vec<f64>, sigmas: Option<Vec<f64>>) -> Result<Self> {
        if t_values.is_empty() {
            return Err(Error::Config("continuation schedule is empty".into()));
        }
        if t_values.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config("schedule values must lie in (0, 1]".into()));
        }
        if t_values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("schedule must be strictly decreasing".into()));
        }
        if let Some(s) = &sigmas {
            if s.len() != t_values.len() {
                return Err(Error::Config(alloc::format!(
                    "{} mollification widths for {} stages",
                    s.len(),
                    t_values.len()
                )));
            }
            if s.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config("mollification widths must be finite and nonnegative".into()));
            }
        }
        Ok(ContinuationSchedule { t_values, sigmas })
    }

    /// `start, start·ratio, …` with `stages` entries.
    pub fn geometric(start: f64, ratio: f64, stages: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config("geometric ratio must lie in (0, 1)".into()));
        }
        let mut t = Vec::with_capacity(stages);
        let mut v = start;
        for _ in 0..stages {
            t.push(v);
            v *= ratio;
        }
        Self::new(t, None)
    }

    /// Attaches widths `σ_i = h·2^{K−i}` (never below `h`), `K` the last stage.
    pub fn with_stage_sigmas(self, spacing: f64) -> Result<Self> {
        let k = self.t_values.len() - 1;
        let sig = (0..=k).map(|i| (spacing * 2f64.powi((k - i) as i32)).max(spacing)).collect();
        Self::new(self.t_values, Some(sig))
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn sigmas(&self) -> Option<&[f64]> {
        self.sigmas.as_deref()
    }

    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }
}

impl Default for ContinuationSchedule {
    /// Ratio ½ from 1 to 2^−12.
    fn default() -> Self {
        Self::geometric(1.0, 0.5, 13).expect("valid default schedule")
    }
}

/// Both sides of the bracket on `V_t / e^{n b_t}` at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketRecord {
    pub t: f64,
    pub b_t: f64,
    /// `∫S_n(χ̃) / (∫S_m(χ+χ̃+ω)/C(n,m))^{n/m}`.
    pub lower: f64,
    /// `V_t / e^{n b_t}` with `V_t = ∫S_n(χ̃+tω)`.
    pub value: f64,
    /// `(∫S_m(χ+χ̃)/C(n,m))^{n/m} / (∫dV)^{(n−m)/m}`.
    pub upper: f64,
    pub holds: bool,
}

/// Outcome of the decreasing-sequence construction `ψ_i = φ_i + C/2^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreasingCertificate {
    pub c_initial: f64,
    pub c_final: f64,
    /// Smallest `C` making the sequence nonincreasing,
    /// `max_i 2^{i+1} sup(φ_{i+1} − φ_i)` (at least 0).
    pub c_min: f64,
    pub adjusted: bool,
    /// `c_final − c_initial`.
    pub adjustment: f64,
    pub monotone: bool,
}

/// Result of a continuation run; `report.failure` is set when a stage did not
/// converge and the run was cut short.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOutcome {
    pub states: Vec<SolverState>,
    pub psi: Vec<ScalarField>,
    pub report: SolveReport,
}

fn is_nonincreasing(psi: &[ScalarField]) -> bool {
    psi.windows(2).all(|w| w[1].values().iter().zip(w[0].values()).all(|(next, prev)| next <= prev))
}

fn build_psi(phis: &[ScalarField], c: f64) -> Vec<ScalarField> {
    phis.iter().enumerate().map(|(i, p)| p.add_scalar(c / 2f64.powi(i as i32))).collect()
}

/// Builds `ψ_i = φ_i + C/2^i` and checks `ψ_{i+1} ≤ ψ_i` pointwise. Without
/// an explicit `C` the largest oscillation `max φ_i − min φ_i` is used. When
/// the check fails, `C` is raised once to just above the smallest admissible
/// value and the adjustment is reported.
pub fn decreasing_sequence(phis: &[ScalarField], c: Option<f64>) -> (Vec<ScalarField>, DecreasingCertificate) {
    let mut c_min: f64 = 0.0;
    for (i, w) in phis.windows(2).enumerate() {
        let sup = w[1].values().iter().zip(w[0].values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        c_min = c_min.max(2f64.powi(i as i32 + 1) * sup);
    }
    let c_initial = c.unwrap_or_else(|| {
        let osc = phis.iter().map(|p| p.max() - p.min()).fold(0.0, f64::max);
        if osc > 0.0 {
            osc
        } else {
            1.0
        }
    });
    let psi = build_psi(phis, c_initial);
    if is_nonincreasing(&psi) {
        let cert = DecreasingCertificate {
            c_initial,
            c_final: c_initial,
            c_min,
            adjusted: false,
            adjustment: 0.0,
            monotone: true,
        };
        return (psi, cert);
    }
    let c_final = c_min * (1.0 + 1e-9) + 1e-14;
    let psi = build_psi(phis, c_final);
    let monotone = is_nonincreasing(&psi);
    let cert = DecreasingCertificate {
        c_initial,
        c_final,
        c_min,
        adjusted: true,
        adjustment: c_final - c_initial,
        monotone,
    };
    (psi, cert)
}

/// Solves the family `t_0 > t_1 > …` with warm starts (falling back to
/// `φ = 0` when a warm start fails), after shifting `f` so the compatibility
/// constant is the one of the degenerate family. Records the bracket on
/// `V_t/e^{n b_t}`, the sup-norm uniformity proxy and the decreasing-sequence
/// certificate. A stage that fails twice ends the run with a partial report.
pub fn continuation_degenerate(
    bg: &BackgroundData,
    f: &ScalarField,
    schedule: &ContinuationSchedule,
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<ContinuationOutcome> {
    config.validate()?;
    let grid = *bg.grid();
    if *f.grid() != grid {
        return Err(Error::Dimension("f and background live on different grids".into()));
    }
    let n = grid.dim();
    let m = config.m;
    if m > n {
        return Err(Error::Config(alloc::format!("degree m={m} exceeds n={n}")));
    }
    let c_nm = binom(n, m);
    let nf = n as f64;
    let mf = m as f64;
    let base0 = bg.chi.add(&bg.chi_tilde);
    let target = integral_sm(&base0, bg, m)?;
    if !(target > 0.0) {
        return Err(Error::Config(alloc::format!(
            "∫S_m(χ+χ̃) dV = {target:e} is not positive; the degenerate family is undefined"
        )));
    }
    let total_volume = integrate(&ScalarField::constant(grid, 1.0), bg.volume());
    let lower = integral_sm(&bg.chi_tilde, bg, n)? / (integral_sm(&bg.base_form(1.0), bg, m)? / c_nm).powf(nf / mf);
    let upper = (target / c_nm).powf(nf / mf) / total_volume.powf((nf - mf) / mf);

    let mut states: Vec<SolverState> = Vec::with_capacity(schedule.len());
    let mut report = SolveReport::default();
    for (i, &t) in schedule.t_values().iter().enumerate() {
        let start = clock.seconds();
        let sigma = schedule.sigmas().map_or(0.0, |s| s[i]);
        let smooth = mollify(f, sigma)?;
        let f_shift = ((target / c_nm).ln() - log_integral_exp(&smooth, mf, bg.volume())) / mf;
        let fi = smooth.add_scalar(f_shift);
        let b_t = compatibility_constant(bg, t, &fi, m)?;
        let v_t = integral_sm(&bg.chi_tilde.add(&bg.omega.scale(t)), bg, n)?;
        let value = v_t / (nf * b_t).exp();
        report.brackets.push(BracketRecord {
            t,
            b_t,
            lower,
            value,
            upper,
            holds: lower <= value * (1.0 + BRACKET_SLACK) && value <= upper * (1.0 + BRACKET_SLACK),
        });

        let mut stage_config = config.clone();
        stage_config.t = t;
        let warm = states.last().map(|s| &s.phi);
        let mut restarted = false;
        let mut outcome = run(bg, &fi, &stage_config, warm);
        if warm.is_some() && matches!(outcome, Err(Error::OutsideCone { .. }) | Err(Error::NonConvergence { .. })) {
            restarted = true;
            outcome = run(bg, &fi, &stage_config, None);
        }
        let (state, history) = match outcome {
            Ok(v) => v,
            Err(e @ (Error::OutsideCone { .. } | Error::NonConvergence { .. })) => {
                report.failure = Some(alloc::format!("stage {i} (t = {t:e}): {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let sup_increment = states.last().map(|prev| {
            state.phi.values().iter().zip(prev.phi.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)
        });
        report.stages.push(StageRecord {
            t,
            b: state.b,
            b_compat: b_t,
            residual_history: history,
            sup_phi: state.phi.max(),
            inf_phi: state.phi.min(),
            margin_min: state.cone_margin_min,
            iters: state.newton_iters,
            seconds: clock.seconds() - start,
            sigma,
            f_shift,
            restarted,
            sup_increment,
        });
        states.push(state);
    }

    let sup_norms: Vec<f64> = states.iter().map(|s| s.phi.max().abs().max(s.phi.min().abs())).collect();
    if !sup_norms.is_empty() {
        report.uniform_sup_bound = Some(uniformity_holds(&sup_norms));
    }
    let phis: Vec<ScalarField> = states.iter().map(|s| s.phi.clone()).collect();
    let (psi, cert) = decreasing_sequence(&phis, None);
    if !phis.is_empty() {
        report.certificate = Some(cert);
    }
    if report.failure.is_none() && states.len() < schedule.len() {
        report.failure = Some("continuation stopped early".to_string());
    }
    Ok(ContinuationOutcome { states, psi, report })
}

/// Median of a nonempty list (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `max ≤ 3 · median`.
pub fn uniformity_holds(sup_norms: &[f64]) -> bool {
    let max = sup_norms.iter().cloned().fold(0.0, f64::max);
    max <= 3.0 * median(sup_norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use alloc::vec;

    #[test]
    fn schedule_validation() {
        assert!(ContinuationSchedule::new(vec![], None).is_err());
        assert!(ContinuationSchedule::new(vec![0.5, 0.5], None).is_err());
        assert!(ContinuationSchedule::new(vec![0.5, 0.25], Some(vec![0.1])).is_err());
        let d = ContinuationSchedule::default();
        assert_eq!(d.len(), 13);
        assert_eq!(d.t_values()[12], 1.0 / 4096.0);
        let s = ContinuationSchedule::geometric(1.0, 0.5, 3).unwrap().with_stage_sigmas(0.1).unwrap();
        assert_eq!(s.sigmas().unwrap(), &[0.4, 0.2, 0.1]);
    }

    #[test]
    fn decreasing_examples() {
        let grid = TorusGrid::new(1, 4, 1.0).unwrap();
        let z = ScalarField::zeros(grid);
        let (psi, cert) = decreasing_sequence(&[z.clone(), z.clone(), z.clone()], Some(1.0));
        assert!(cert.monotone && !cert.adjusted);
        assert_eq!(psi[2].values()[0], 0.25);
        // two stages, sup difference d → C_min = 2d
        let d = 0.3;
        let up = ScalarField::from_fn(grid, |x| if x[0] == 0.0 { d } else { 0.0 });
        let (_, cert) = decreasing_sequence(&[z, up], Some(0.1));
        assert!((cert.c_min - 2.0 * d).abs() < 1e-15);
        assert!(cert.adjusted && cert.monotone);
    }

    #[test]
    fn median_and_uniformity() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(uniformity_holds(&[0.0, 0.0]));
        assert!(!uniformity_holds(&[1.0, 1.0, 10.0]));
    }
}
