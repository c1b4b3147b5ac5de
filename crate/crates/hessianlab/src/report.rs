//! Serializable mirrors of the kernel's reports.

use hessianlab_core::estimates::{
    ExponentFit, LemmaCheck, MonitorOutcome, StabilityRecord, UniformityReport, ViscosityReport,
};
use hessianlab_core::solver::{BracketRecord, DecreasingCertificate, StageRecord};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageJson {
    pub t: f64,
    pub b: f64,
    pub b_compat: f64,
    pub residual_history: Vec<f64>,
    pub sup_phi: f64,
    pub inf_phi: f64,
    pub margin_min: f64,
    pub iters: usize,
    pub seconds: f64,
    pub sigma: f64,
    pub f_shift: f64,
    pub restarted: bool,
    pub sup_increment: Option<f64>,
}

impl From<&StageRecord> for StageJson {
    fn from(s: &StageRecord) -> Self {
        StageJson {
            t: s.t,
            b: s.b,
            b_compat: s.b_compat,
            residual_history: s.residual_history.clone(),
            sup_phi: s.sup_phi,
            inf_phi: s.inf_phi,
            margin_min: s.margin_min,
            iters: s.iters,
            seconds: s.seconds,
            sigma: s.sigma,
            f_shift: s.f_shift,
            restarted: s.restarted,
            sup_increment: s.sup_increment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketJson {
    pub t: f64,
    pub b_t: f64,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub holds: bool,
}

impl From<&BracketRecord> for BracketJson {
    fn from(b: &BracketRecord) -> Self {
        BracketJson { t: b.t, b_t: b.b_t, lower: b.lower, value: b.value, upper: b.upper, holds: b.holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateJson {
    pub c_initial: f64,
    pub c_final: f64,
    pub c_min: f64,
    pub adjusted: bool,
    pub adjustment: f64,
    pub monotone: bool,
}

impl From<&DecreasingCertificate> for CertificateJson {
    fn from(c: &DecreasingCertificate) -> Self {
        CertificateJson {
            c_initial: c.c_initial,
            c_final: c.c_final,
            c_min: c.c_min,
            adjusted: c.adjusted,
            adjustment: c.adjustment,
            monotone: c.monotone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityJson {
    pub rows: Vec<UniformityRowJson>,
    pub max: f64,
    pub median: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityRowJson {
    pub t: f64,
    pub sup_norm: f64,
    pub entropy: f64,
}

impl From<&UniformityReport> for UniformityJson {
    fn from(u: &UniformityReport) -> Self {
        UniformityJson {
            rows: u.rows.iter().map(|r| UniformityRowJson { t: r.t, sup_norm: r.sup_norm, entropy: r.entropy }).collect(),
            max: u.max,
            median: u.median,
            holds: u.holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MonitorJson {
    Report {
        sup_w: f64,
        bound_rhs: f64,
        a: f64,
        kappa: f64,
        c_geometry: f64,
        trace_consistency: f64,
        holds: bool,
    },
    Skipped {
        reason: String,
    },
}

impl From<&MonitorOutcome> for MonitorJson {
    fn from(m: &MonitorOutcome) -> Self {
        match m {
            MonitorOutcome::Report(r) => MonitorJson::Report {
                sup_w: r.sup_w,
                bound_rhs: r.bound_rhs,
                a: r.a,
                kappa: r.kappa,
                c_geometry: r.c_geometry,
                trace_consistency: r.trace_consistency,
                holds: r.holds,
            },
            MonitorOutcome::Skipped(reason) => MonitorJson::Skipped { reason: reason.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub eps_scale: f64,
    pub l1_gap: f64,
    pub lq_gap_plus: f64,
    pub sup_gap: f64,
    pub centered_gap: f64,
    pub predicted_exponent: f64,
}

impl From<&StabilityRecord> for StabilityRow {
    fn from(r: &StabilityRecord) -> Self {
        StabilityRow {
            eps_scale: r.eps_scale,
            l1_gap: r.l1_gap,
            lq_gap_plus: r.lq_gap_plus,
            sup_gap: r.sup_gap,
            centered_gap: r.centered_gap,
            predicted_exponent: r.predicted_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitJson {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    pub floor: f64,
    pub passes: bool,
    pub constant: f64,
}

impl From<&ExponentFit> for FitJson {
    fn from(f: &ExponentFit) -> Self {
        FitJson {
            slope: f.slope,
            intercept: f.intercept,
            points: f.points,
            floor: f.floor,
            passes: f.passes,
            constant: f.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscosityJson {
    pub checked: usize,
    pub sub_violations: usize,
    pub super_violations: usize,
    pub super_skipped: usize,
    pub tolerance: f64,
    pub violating_points: Vec<usize>,
}

impl From<&ViscosityReport> for ViscosityJson {
    fn from(v: &ViscosityReport) -> Self {
        ViscosityJson {
            checked: v.checked,
            sub_violations: v.sub_violations,
            super_violations: v.super_violations,
            super_skipped: v.super_skipped,
            tolerance: v.tolerance,
            violating_points: v.violating_points.clone(),
        }
    }
}

/// Summary of one lemma family batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub families: usize,
    pub infeasible: usize,
    pub violations: usize,
    /// Smallest slack over the feasible families.
    pub min_slack: f64,
}

impl LemmaSummary {
    pub fn from_checks(checks: &[Option<LemmaCheck>]) -> Self {
        let feasible: Vec<&LemmaCheck> = checks.iter().flatten().collect();
        LemmaSummary {
            families: checks.len(),
            infeasible: checks.len() - feasible.len(),
            violations: feasible.iter().filter(|c| !c.holds).count(),
            min_slack: feasible.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min),
        }
    }
}
