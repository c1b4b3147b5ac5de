//! The five commands. Each validates its configuration, runs inside a rayon
//! pool of the configured size, writes its artifacts to `output_dir` and
//! returns an exit status plus a one-line summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hessianlab_core::algebra::{check_garding, check_maclaurin, elem_sym_all, in_closed_cone, worst_margin};
use hessianlab_core::background::BackgroundData;
use hessianlab_core::estimates::{
    laplacian_monitor, linf_uniformity_report, stability_record, summarize_stability, synthetic_family,
    uniqueness_energy_normalized, verify_lemma, viscosity_check, MonitorOutcome, StabilityOutcome,
};
use hessianlab_core::generators::smooth_noise;
use hessianlab_core::grid::{complex_hessian, eigen_field, mollify, HermitianField, ScalarField};
use hessianlab_core::solver::{
    continuation_degenerate, normalize_sup, solve_with_initial, Clock, SolverState,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, FSpec};
use crate::error::{Error, Result};
use crate::io;
use crate::report::{
    BracketJson, CertificateJson, FitJson, LemmaSummary, MonitorJson, StabilityRow, StageJson, UniformityJson,
    ViscosityJson,
};

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Ok = 0,
    Config = 1,
    NonConvergence = 2,
    Partial = 3,
    VerifyFail = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Status for an error that ended a command.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Core(hessianlab_core::Error::NonConvergence { .. } | hessianlab_core::Error::OutsideCone { .. }) => {
                ExitStatus::NonConvergence
            }
            _ => ExitStatus::Config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub status: ExitStatus,
    pub summary: String,
    /// Main report written by the command, if any.
    pub report: Option<PathBuf>,
}

/// Elapsed wall-clock seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::start()
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn is_solver_failure(e: &hessianlab_core::Error) -> bool {
    matches!(e, hessianlab_core::Error::NonConvergence { .. } | hessianlab_core::Error::OutsideCone { .. })
}

fn in_pool<T: Send>(cfg: &ExperimentConfig, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let threads = cfg.thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(job)
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn sup_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn write_slices(dir: &Path, name: &str, phi: &ScalarField) -> Result<()> {
    #[derive(Serialize)]
    struct Line {
        x: f64,
        value: f64,
    }
    #[derive(Serialize)]
    struct Plane {
        x: f64,
        y: f64,
        value: f64,
    }
    let line: Vec<Line> = io::line_slice(phi, 0, 0).into_iter().map(|(x, value)| Line { x, value }).collect();
    io::write_csv(&dir.join(format!("{name}_line.csv")), &line)?;
    // the complex plane of the first coordinate
    let plane: Vec<Plane> =
        io::plane_slice(phi, (0, 1), 0).into_iter().map(|(x, y, value)| Plane { x, y, value }).collect();
    io::write_csv(&dir.join(format!("{name}_plane.csv")), &plane)
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub points: usize,
    pub h: f64,
    /// `sup |φ_h − φ*|` with both normalized to grid maximum 0.
    pub sup_error: f64,
    pub b: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveJson {
    pub command: &'static str,
    pub n: usize,
    pub m: usize,
    pub points: usize,
    pub t: f64,
    pub stages: Vec<StageJson>,
    pub failure: Option<String>,
    /// Manufactured data only: error against the exact potential per grid.
    pub convergence: Vec<ErrorRow>,
    /// `log2` of consecutive error ratios for grids that double.
    pub observed_orders: Vec<f64>,
}

fn solve_t(cfg: &ExperimentConfig) -> f64 {
    cfg.solver.t.unwrap_or(1.0)
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    in_pool(cfg, || solve_inner(cfg))
}

fn solve_inner(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let t = solve_t(cfg);
    let scfg = cfg.solver_config(t);
    let dir = prepare_output(cfg)?;
    let clock = WallClock::start();
    let bg = cfg.background(cfg.grid()?)?;
    let (f, man) = cfg.rhs(&cfg.problem.f, &bg, t)?;
    let mut json = SolveJson {
        command: "solve",
        n: cfg.problem.n,
        m: cfg.problem.m,
        points: cfg.problem.points,
        t,
        stages: Vec::new(),
        failure: None,
        convergence: Vec::new(),
        observed_orders: Vec::new(),
    };
    let report_path = dir.join("report.json");
    let state = match solve_with_initial(&bg, &f, &scfg, None, &clock) {
        Ok((state, report)) => {
            json.stages = report.stages.iter().map(StageJson::from).collect();
            state
        }
        Err(e) if is_solver_failure(&e) => {
            json.failure = Some(e.to_string());
            io::write_json(&report_path, &json)?;
            return Ok(CommandOutcome {
                status: ExitStatus::NonConvergence,
                summary: format!("solve failed: {e}"),
                report: Some(report_path),
            });
        }
        Err(e) => return Err(e.into()),
    };
    io::write_scalar(&dir.join("phi.hlf1"), &state.phi)?;
    if cfg.experiment.slices {
        write_slices(&dir, "phi", &state.phi)?;
    }

    if let Some(man) = &man {
        // the configured grid first, then the refinements
        let mut rows = vec![ErrorRow {
            points: cfg.problem.points,
            h: bg.grid().spacing(),
            sup_error: sup_abs_diff(&state.phi, &normalize_sup(&man.phi_exact)),
            b: state.b,
            iters: state.newton_iters,
        }];
        let refined: Vec<Result<ErrorRow>> = cfg
            .experiment
            .refinements
            .par_iter()
            .map(|&np| {
                let bg = cfg.background(cfg.grid_with(np)?)?;
                let (f, man) = cfg.rhs(&cfg.problem.f, &bg, t)?;
                let man = man.expect("manufactured spec yields φ*");
                let (s, _) = solve_with_initial(&bg, &f, &scfg, None, &clock)?;
                Ok(ErrorRow {
                    points: np,
                    h: bg.grid().spacing(),
                    sup_error: sup_abs_diff(&s.phi, &normalize_sup(&man.phi_exact)),
                    b: s.b,
                    iters: s.newton_iters,
                })
            })
            .collect();
        for r in refined {
            match r {
                Ok(row) => rows.push(row),
                Err(Error::Core(e)) if is_solver_failure(&e) => {
                    json.failure = Some(format!("refinement: {e}"));
                }
                Err(e) => return Err(e),
            }
        }
        rows.sort_by_key(|r| r.points);
        json.observed_orders = rows
            .windows(2)
            .filter(|w| w[1].points == 2 * w[0].points && w[1].sup_error > 0.0)
            .map(|w| (w[0].sup_error / w[1].sup_error).log2())
            .collect();
        io::write_csv(&dir.join("convergence.csv"), &rows)?;
        json.convergence = rows;
    }
    io::write_json(&report_path, &json)?;
    let status = if json.failure.is_some() { ExitStatus::Partial } else { ExitStatus::Ok };
    Ok(CommandOutcome {
        status,
        summary: format!(
            "solve: {} Newton iterations, b = {:.6e}, residual {:.2e}",
            state.newton_iters, state.b, state.residual_sup
        ),
        report: Some(report_path),
    })
}

// ---------------------------------------------------------- continuation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub stage: usize,
    pub t: f64,
    pub b: f64,
    pub b_compat: f64,
    pub sup_phi: f64,
    pub inf_phi: f64,
    pub margin_min: f64,
    pub iters: usize,
    pub seconds: f64,
    pub sigma: f64,
    pub restarted: bool,
    pub sup_increment: Option<f64>,
    pub bracket_lower: f64,
    pub bracket_value: f64,
    pub bracket_upper: f64,
    pub bracket_holds: bool,
    pub sup_w: Option<f64>,
    pub monitor_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationJson {
    pub command: &'static str,
    pub n: usize,
    pub m: usize,
    pub points: usize,
    pub t_values: Vec<f64>,
    pub stages: Vec<StageJson>,
    pub brackets: Vec<BracketJson>,
    pub uniform_sup_bound: Option<bool>,
    pub certificate: Option<CertificateJson>,
    pub uniformity: Option<UniformityJson>,
    pub monitor: Vec<MonitorJson>,
    pub failure: Option<String>,
}

pub fn cmd_continuation(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    in_pool(cfg, || continuation_inner(cfg))
}

fn continuation_inner(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let schedule = cfg.schedule()?;
    let scfg = cfg.solver_config(schedule.t_values()[0]);
    let dir = prepare_output(cfg)?;
    let clock = WallClock::start();
    let bg = cfg.background(cfg.grid()?)?;
    let (f, _) = cfg.rhs(&cfg.problem.f, &bg, 0.0)?;
    let out = continuation_degenerate(&bg, &f, &schedule, &scfg, &clock)?;
    let report = &out.report;
    let m = cfg.problem.m;

    // the right-hand side each stage actually solved
    let stage_f: Vec<ScalarField> = report
        .stages
        .iter()
        .map(|s| Ok(mollify(&f, s.sigma)?.add_scalar(s.f_shift)))
        .collect::<Result<_>>()?;
    let monitor: Vec<MonitorOutcome> = out
        .states
        .par_iter()
        .zip(report.stages.par_iter())
        .zip(stage_f.par_iter())
        .map(|((state, s), fi)| laplacian_monitor(state, &bg, s.t, fi, m))
        .collect::<std::result::Result<_, _>>()?;
    let uniformity = if out.states.is_empty() {
        None
    } else {
        let ts: Vec<f64> = report.stages.iter().map(|s| s.t).collect();
        let phis: Vec<ScalarField> = out.states.iter().map(|s| s.phi.clone()).collect();
        Some(linf_uniformity_report(&ts, &phis, &stage_f, cfg.problem.p, bg.volume())?)
    };

    let rows: Vec<StageRow> = report
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let br = &report.brackets[i];
            let (sup_w, monitor_bound) = match &monitor[i] {
                MonitorOutcome::Report(r) => (Some(r.sup_w), Some(r.bound_rhs)),
                MonitorOutcome::Skipped(_) => (None, None),
            };
            StageRow {
                stage: i,
                t: s.t,
                b: s.b,
                b_compat: s.b_compat,
                sup_phi: s.sup_phi,
                inf_phi: s.inf_phi,
                margin_min: s.margin_min,
                iters: s.iters,
                seconds: s.seconds,
                sigma: s.sigma,
                restarted: s.restarted,
                sup_increment: s.sup_increment,
                bracket_lower: br.lower,
                bracket_value: br.value,
                bracket_upper: br.upper,
                bracket_holds: br.holds,
                sup_w,
                monitor_bound,
            }
        })
        .collect();
    io::write_csv(&dir.join("stages.csv"), &rows)?;
    for (i, state) in out.states.iter().enumerate() {
        io::write_scalar(&dir.join(format!("phi_stage_{i:02}.hlf1")), &state.phi)?;
    }
    if let (Some(last), Some(psi)) = (out.states.last(), out.psi.last()) {
        io::write_scalar(&dir.join("phi_final.hlf1"), &last.phi)?;
        io::write_scalar(&dir.join("psi_final.hlf1"), psi)?;
        if cfg.experiment.slices {
            write_slices(&dir, "phi_final", &last.phi)?;
        }
    }

    let json = ContinuationJson {
        command: "continuation",
        n: cfg.problem.n,
        m,
        points: cfg.problem.points,
        t_values: schedule.t_values().to_vec(),
        stages: report.stages.iter().map(StageJson::from).collect(),
        brackets: report.brackets.iter().map(BracketJson::from).collect(),
        uniform_sup_bound: report.uniform_sup_bound,
        certificate: report.certificate.as_ref().map(CertificateJson::from),
        uniformity: uniformity.as_ref().map(UniformityJson::from),
        monitor: monitor.iter().map(MonitorJson::from).collect(),
        failure: report.failure.clone(),
    };
    let path = dir.join("report.json");
    io::write_json(&path, &json)?;
    let done = report.stages.len();
    let status = match (&report.failure, done) {
        (None, _) => ExitStatus::Ok,
        (Some(_), 0) => ExitStatus::NonConvergence,
        (Some(_), _) => ExitStatus::Partial,
    };
    Ok(CommandOutcome {
        status,
        summary: format!(
            "continuation: {done}/{} stages, uniform sup bound {:?}, certificate C_min = {:.3e}",
            schedule.len(),
            report.uniform_sup_bound,
            report.certificate.as_ref().map_or(f64::NAN, |c| c.c_min)
        ),
        report: Some(path),
    })
}

// ------------------------------------------------------------ stability

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityJson {
    pub command: &'static str,
    pub n: usize,
    pub q: f64,
    pub q_prime: f64,
    pub t: f64,
    pub predicted_exponent: f64,
    pub records: Vec<StabilityRow>,
    pub fit: Option<FitJson>,
    pub failures: Vec<(f64, String)>,
}

/// A record plus the fit, repeated on every row of records.csv.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct RecordCsv {
    eps_scale: f64,
    l1_gap: f64,
    lq_gap_plus: f64,
    sup_gap: f64,
    centered_gap: f64,
    predicted_exponent: f64,
    fitted_slope: Option<f64>,
    floor: Option<f64>,
}

fn default_perturbation(cfg: &ExperimentConfig) -> FSpec {
    FSpec::Bump { center: None, width: 0.15 * cfg.problem.period, height: 1.0 }
}

/// Base solve, then every perturbed pair in parallel; aggregation order is
/// fixed by the scale list, so results do not depend on the thread count.
pub fn run_stability(cfg: &ExperimentConfig, bg: &BackgroundData, t: f64) -> Result<StabilityOutcome> {
    let scfg = cfg.solver_config(t);
    let (f, _) = cfg.rhs(&cfg.problem.f, bg, t)?;
    let pert_spec = cfg.experiment.perturbation.clone().unwrap_or_else(|| default_perturbation(cfg));
    let (pert, _) = cfg.rhs(&pert_spec, bg, t)?;
    let clock = WallClock::start();
    let (base, _) = solve_with_initial(bg, &f, &scfg, None, &clock)?;
    let mut pair_cfg = scfg.clone();
    if let Some(cap) = cfg.experiment.pair_max_newton {
        pair_cfg.max_newton = cap;
    }
    let (q, qp, m) = (cfg.problem.q, cfg.problem.q_prime, cfg.problem.m);
    let results: Vec<Result<std::result::Result<_, (f64, String)>>> = cfg
        .experiment
        .scales
        .par_iter()
        .map(|&scale| {
            let f2 = f.zip_map(&pert, |a, b| a + scale * b);
            match solve_with_initial(bg, &f2, &pair_cfg, Some(&base.phi), &clock) {
                Ok((state, _)) => {
                    Ok(Ok(stability_record(scale, (&base.phi, &f), (&state.phi, &f2), m, q, qp, bg.volume())?))
                }
                Err(e) if is_solver_failure(&e) => Ok(Err((scale, e.to_string()))),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r? {
            Ok(rec) => records.push(rec),
            Err(fail) => failures.push(fail),
        }
    }
    Ok(summarize_stability(records, failures, cfg.problem.n, q, qp)?)
}

pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    in_pool(cfg, || {
        let t = solve_t(cfg);
        let dir = prepare_output(cfg)?;
        let bg = cfg.background(cfg.grid()?)?;
        let out = match run_stability(cfg, &bg, t) {
            Ok(o) => o,
            Err(Error::Core(e)) if is_solver_failure(&e) => {
                return Ok(CommandOutcome {
                    status: ExitStatus::NonConvergence,
                    summary: format!("stability: base solve failed: {e}"),
                    report: None,
                })
            }
            Err(e) => return Err(e),
        };
        let rows: Vec<StabilityRow> = out.records.iter().map(StabilityRow::from).collect();
        let csv_rows: Vec<RecordCsv> = rows
            .iter()
            .map(|r| RecordCsv {
                eps_scale: r.eps_scale,
                l1_gap: r.l1_gap,
                lq_gap_plus: r.lq_gap_plus,
                sup_gap: r.sup_gap,
                centered_gap: r.centered_gap,
                predicted_exponent: r.predicted_exponent,
                fitted_slope: out.fit.as_ref().map(|f| f.slope),
                floor: out.fit.as_ref().map(|f| f.floor),
            })
            .collect();
        io::write_csv(&dir.join("records.csv"), &csv_rows)?;
        let json = StabilityJson {
            command: "stability",
            n: cfg.problem.n,
            q: cfg.problem.q,
            q_prime: cfg.problem.q_prime,
            t,
            predicted_exponent: out.predicted_exponent,
            records: rows,
            fit: out.fit.as_ref().map(FitJson::from),
            failures: out.failures.clone(),
        };
        let path = dir.join("report.json");
        io::write_json(&path, &json)?;
        let status = if out.failures.is_empty() { ExitStatus::Ok } else { ExitStatus::Partial };
        let summary = match &out.fit {
            Some(fit) => format!(
                "stability: slope {:.3} vs floor {:.3} ({}), {} failures",
                fit.slope,
                fit.floor,
                if fit.passes { "pass" } else { "below floor" },
                out.failures.len()
            ),
            None => format!("stability: no fit (fewer than two positive gaps), {} failures", out.failures.len()),
        };
        Ok(CommandOutcome { status, summary, report: Some(path) })
    })
}

// --------------------------------------------------------------- verify

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property {
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyJson {
    pub command: &'static str,
    pub t: f64,
    pub properties: Vec<Property>,
    pub all_pass: bool,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Height of the injected spike; it turns the local Hessian strongly
/// negative, so the perturbed potential is no subsolution there.
const SPIKE: f64 = 0.05;

fn lemma_property(cfg: &ExperimentConfig, kolodziej: bool) -> Result<Property> {
    let samples = cfg.experiment.lemma_samples;
    let checks: Vec<_> = (0..cfg.experiment.lemma_families as u64)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(k);
            Ok(verify_lemma(&synthetic_family(kolodziej, samples, seed)?, 1e-12))
        })
        .collect::<Result<_>>()?;
    let summary = LemmaSummary::from_checks(&checks);
    Ok(Property {
        name: if kolodziej { "lemma_kolodziej" } else { "lemma_degiorgi" },
        verdict: verdict(summary.violations == 0 && summary.infeasible == 0),
        detail: serde_json::to_value(&summary)?,
    })
}

fn pointwise_algebra(state: &SolverState, bg: &BackgroundData, t: f64, m: usize) -> Result<Property> {
    let x = bg.base_form(t).add(&complex_hessian(&state.phi));
    let eig = eigen_field(&x, &bg.omega)?;
    let n = bg.grid().dim();
    let ones = vec![1.0; n];
    let (mut mac, mut gar) = (f64::INFINITY, f64::INFINITY);
    for p in 0..bg.grid().len() {
        mac = mac.min(check_maclaurin(eig.at(p), m)?);
        gar = gar.min(check_garding(eig.at(p), &ones, m)?);
    }
    Ok(Property {
        name: "maclaurin_garding",
        verdict: verdict(mac >= -1e-10 && gar >= -1e-10),
        detail: serde_json::json!({ "min_maclaurin_gap": mac, "min_garding_gap": gar }),
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    in_pool(cfg, || verify_inner(cfg))
}

fn verify_inner(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let t = solve_t(cfg);
    let m = cfg.problem.m;
    let scfg = cfg.solver_config(t);
    let dir = prepare_output(cfg)?;
    let clock = WallClock::start();
    let bg = cfg.background(cfg.grid()?)?;
    let (f, _) = cfg.rhs(&cfg.problem.f, &bg, t)?;

    let (lemmas, twins) = rayon::join(
        || -> Result<Vec<Property>> { Ok(vec![lemma_property(cfg, true)?, lemma_property(cfg, false)?]) },
        || -> Result<(SolverState, SolverState)> {
            let noise = smooth_noise(*bg.grid(), cfg.experiment.twin_noise, cfg.seed ^ 0x5eed)?;
            let (a, b) = rayon::join(
                || solve_with_initial(&bg, &f, &scfg, None, &clock),
                || solve_with_initial(&bg, &f, &scfg, Some(&noise), &clock),
            );
            Ok((a?.0, b?.0))
        },
    );
    let mut properties = lemmas?;
    let (s1, s2) = match twins {
        Ok(v) => v,
        Err(Error::Core(e)) if is_solver_failure(&e) => {
            return Ok(CommandOutcome {
                status: ExitStatus::NonConvergence,
                summary: format!("verify: solve failed: {e}"),
                report: None,
            })
        }
        Err(e) => return Err(e),
    };

    let energy = uniqueness_energy_normalized(&s1.phi, &s2.phi, &bg, t)?;
    let gap = sup_abs_diff(&s1.phi, &s2.phi);
    properties.push(Property {
        name: "uniqueness",
        verdict: verdict(energy < 1e-8 && gap < 10.0 * scfg.newton_tol),
        detail: serde_json::json!({ "normalized_energy": energy, "sup_gap": gap, "b_gap": (s1.b - s2.b).abs() }),
    });

    let (phi, samples) = if cfg.experiment.inject_spike {
        let mut phi = s1.phi.clone();
        let p = bg.grid().len() / 3;
        phi.values_mut()[p] += SPIKE;
        // the spike must be examined, so every point is checked
        (phi, None)
    } else {
        (s1.phi.clone(), cfg.experiment.viscosity_samples)
    };
    let visc = viscosity_check(&phi, s1.b, &bg, t, &f, m, samples, cfg.seed)?;
    properties.push(Property {
        name: "viscosity",
        verdict: verdict(visc.violations() == 0),
        detail: serde_json::to_value(ViscosityJson::from(&visc))?,
    });

    let monitor = laplacian_monitor(&s1, &bg, t, &f, m)?;
    let monitor_verdict = match &monitor {
        MonitorOutcome::Report(r) => verdict(r.holds && r.trace_consistency < 1e-10),
        MonitorOutcome::Skipped(_) => Verdict::Skip,
    };
    properties.push(Property {
        name: "laplacian_monitor",
        verdict: monitor_verdict,
        detail: serde_json::to_value(MonitorJson::from(&monitor))?,
    });
    properties.push(pointwise_algebra(&s1, &bg, t, m)?);

    let all_pass = properties.iter().all(|p| p.verdict != Verdict::Fail);
    let json = VerifyJson { command: "verify", t, properties, all_pass };
    let path = dir.join("verify.json");
    io::write_json(&path, &json)?;
    let failed: Vec<&str> = json.properties.iter().filter(|p| p.verdict == Verdict::Fail).map(|p| p.name).collect();
    Ok(CommandOutcome {
        status: if all_pass { ExitStatus::Ok } else { ExitStatus::VerifyFail },
        summary: if all_pass {
            format!("verify: {} properties PASS", json.properties.len())
        } else {
            format!("verify: FAIL {}", failed.join(", "))
        },
        report: Some(path),
    })
}

// ------------------------------------------------------------ conecheck

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TupleReport {
    pub lambda: Vec<f64>,
    pub m: usize,
    /// `S_0 … S_m`.
    pub elementary: Vec<f64>,
    pub worst_margin: f64,
    pub in_open_cone: bool,
    pub in_closed_cone: bool,
    /// Present inside the closed cone.
    pub maclaurin_gap: Option<f64>,
    /// Against `η = (1, …, 1)`; present inside the closed cone.
    pub garding_gap: Option<f64>,
}

/// Parses `"(1, 2, 3)"`, `"1,2,3"` or `"1 2 3"`; a Unicode minus sign is
/// accepted.
pub fn parse_tuple(text: &str) -> Result<Vec<f64>> {
    let text = text.replace('\u{2212}', "-");
    let inner = text.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let values: Vec<f64> = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad tuple entry {s:?}"))))
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("tuple {text:?} needs finite entries")));
    }
    Ok(values)
}

pub fn tuple_report(lambda: &[f64], m: usize) -> Result<TupleReport> {
    let n = lambda.len();
    if m == 0 || m > n {
        return Err(Error::Config(format!("--m must lie in 1..={n}, got {m}")));
    }
    let closed = in_closed_cone(lambda, m, 1e-12);
    let ones = vec![1.0; n];
    Ok(TupleReport {
        lambda: lambda.to_vec(),
        m,
        elementary: elem_sym_all(lambda, m),
        worst_margin: worst_margin(lambda, m),
        in_open_cone: worst_margin(lambda, m) > 0.0,
        in_closed_cone: closed,
        maclaurin_gap: if closed { Some(check_maclaurin(lambda, m)?) } else { None },
        garding_gap: if closed { Some(check_garding(lambda, &ones, m)?) } else { None },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldConeReport {
    pub command: &'static str,
    pub source: String,
    pub m: usize,
    pub points: usize,
    pub min_margin: f64,
    pub max_margin: f64,
    pub outside: usize,
    pub histogram: Vec<HistogramBin>,
}

const BINS: usize = 10;

fn histogram(values: &[f64]) -> Vec<HistogramBin> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / BINS as f64 } else { 1.0 };
    let mut counts = [0usize; BINS];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBin { lower: lo + i as f64 * width, upper: lo + (i + 1) as f64 * width, count })
        .collect()
}

/// Worst margins of the configured form: `χ + χ̃ + tω` plus `i∂∂̄φ` for a
/// scalar field file, or the form itself for a Hermitian field file.
pub fn cmd_conecheck(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    in_pool(cfg, || {
        let t = solve_t(cfg);
        let m = cfg.problem.m;
        let dir = prepare_output(cfg)?;
        let bg = cfg.background(cfg.grid()?)?;
        let (form, source): (HermitianField, String) = match &cfg.experiment.field {
            None => (bg.base_form(t), format!("background form at t = {t}")),
            Some(path) => match io::read_scalar(path) {
                Ok(phi) => {
                    if phi.grid() != bg.grid() {
                        return Err(Error::Config(format!("{}: grid differs from the problem", path.display())));
                    }
                    (bg.base_form(t).add(&complex_hessian(&phi)), path.display().to_string())
                }
                Err(Error::Format { .. }) => {
                    let x = io::read_hermitian(path)?;
                    if x.grid() != bg.grid() {
                        return Err(Error::Config(format!("{}: grid differs from the problem", path.display())));
                    }
                    (x, path.display().to_string())
                }
                Err(e) => return Err(e),
            },
        };
        let margins = eigen_field(&form, &bg.omega)?.worst_margins(m);
        let vals = margins.values();
        let report = FieldConeReport {
            command: "conecheck",
            source,
            m,
            points: vals.len(),
            min_margin: margins.min(),
            max_margin: margins.max(),
            outside: vals.iter().filter(|&&w| w <= 0.0).count(),
            histogram: histogram(vals),
        };
        let path = dir.join("conecheck.json");
        io::write_json(&path, &report)?;
        Ok(CommandOutcome {
            status: ExitStatus::Ok,
            summary: format!(
                "conecheck: {} of {} points outside Γ^{m}, worst margin {:.3e}",
                report.outside, report.points, report.min_margin
            ),
            report: Some(path),
        })
    })
}
