mod common;

use common::*;
use hessianlab_core::background::BackgroundData;
use hessianlab_core::estimates::*;
use hessianlab_core::generators::*;
use hessianlab_core::grid::*;
use hessianlab_core::solver::*;
use proptest::prelude::*;
use rand::Rng;

fn flat(np: usize, kappa: f64) -> BackgroundData {
    BackgroundData::flat_kappa(TorusGrid::new(2, np, 1.0).unwrap(), kappa, 2).unwrap()
}

fn manufactured(bg: &BackgroundData, t: f64, bound: f64, seed: u64) -> Manufactured {
    let poly = TrigPolynomial::random(2, 1.0, 1, 4, bound, seed).unwrap();
    manufactured_problem(bg, t, poly, 2).unwrap()
}

#[test]
fn lemma_families_have_no_violations() {
    for seed in 0..100 {
        for kolodziej in [true, false] {
            let h = synthetic_family(kolodziej, 400, seed).unwrap();
            let check = verify_lemma(&h, 1e-12).expect("family certified");
            assert!(check.holds, "seed {seed}: {check:?}");
        }
    }
}

#[test]
fn level_set_masses_vanish_past_the_threshold() {
    // s ↦ ∫_{φ < −s} e^{nf} dV of a solver output is nonincreasing; certify
    // it on the sampled levels and check the threshold
    let bg = flat(8, 1.0);
    let man = manufactured(&bg, 0.5, 0.4, 2);
    let (state, _) = solve_nondegenerate(&bg, &man.f_star, &SolverConfig::new(2, 0.5)).unwrap();
    let depth = -state.phi.min();
    let s: Vec<f64> = (0..200).map(|i| 1.5 * depth * i as f64 / 199.0).collect();
    let phi: Vec<f64> = s
        .iter()
        .map(|&level| {
            let mask = state.phi.zip_map(&man.f_star, |p, f| if p < -level { (2.0 * f).exp() } else { 0.0 });
            integrate(&mask, bg.volume())
        })
        .collect();
    let h = IterationHypothesis::new(s, phi, LemmaForm::DeGiorgi { alpha: 1.0, delta: 0.5 }).unwrap();
    let check = verify_lemma(&h, 0.0).unwrap();
    assert!(check.certification.feasible && check.holds, "{check:?}");
}

#[test]
fn viscosity_exact_solutions_have_no_violations() {
    for np in [8usize, 12] {
        let bg = flat(np, 1.0);
        let man = manufactured(&bg, 0.5, 0.3, 11);
        let config = SolverConfig::new(2, 0.5);
        let (state, _) = solve_nondegenerate(&bg, &man.f_star, &config).unwrap();
        let rep = viscosity_check(&state.phi, state.b, &bg, 0.5, &man.f_star, 2, None, 0).unwrap();
        assert_eq!(rep.checked, bg.grid().len());
        assert_eq!(rep.violations(), 0, "N={np}: {rep:?}");
    }
}

#[test]
fn viscosity_detects_a_spike() {
    let bg = flat(8, 1.0);
    let f = ScalarField::zeros(*bg.grid());
    let b = 1.5f64.ln();
    let clean = viscosity_check(&ScalarField::zeros(*bg.grid()), b, &bg, 0.5, &f, 2, None, 0).unwrap();
    assert_eq!(clean.violations(), 0);
    let mut phi = ScalarField::zeros(*bg.grid());
    let spot = 123;
    phi.values_mut()[spot] = 0.5;
    let rep = viscosity_check(&phi, b, &bg, 0.5, &f, 2, None, 0).unwrap();
    assert!(rep.sub_violations >= 1);
    assert!(rep.violating_points.contains(&spot));
    let sampled = viscosity_check(&phi, b, &bg, 0.5, &f, 2, Some(50), 9).unwrap();
    assert_eq!(sampled.checked, 50);
}

#[test]
fn uniqueness_energy_trivial_cases() {
    let bg = flat(6, 1.0);
    let phi = TrigPolynomial::random(2, 1.0, 1, 4, 0.3, 1).unwrap().sample(*bg.grid());
    assert_eq!(uniqueness_energy(&phi, &phi, &bg, 0.0).unwrap(), 0.0);
    let shifted = phi.add_scalar(0.7);
    assert!(uniqueness_energy(&phi, &shifted, &bg, 0.0).unwrap().abs() < 1e-24);
    assert_eq!(uniqueness_energy_normalized(&ScalarField::zeros(*bg.grid()), &ScalarField::zeros(*bg.grid()), &bg, 0.0).unwrap(), 0.0);
    let line = BackgroundData::flat_kappa(TorusGrid::new(1, 8, 1.0).unwrap(), 1.0, 1).unwrap();
    let z = ScalarField::zeros(*line.grid());
    assert!(uniqueness_energy(&z, &z, &line, 0.0).is_err());
}

#[test]
fn energy_of_a_single_mode() {
    // u = cos(2πx₁): ∂_{z₁}u = −π sin(2πx₁), T = tr(α) − α₁₁ = κ for α = κI
    let kappa = 1.5;
    let bg = flat(16, kappa);
    let u = ScalarField::from_fn(*bg.grid(), |x| (2.0 * std::f64::consts::PI * x[0]).cos());
    let e = energy_form(&u, &bg, 0.0).unwrap();
    let h = bg.grid().spacing();
    // centered differences see sin(2πh)/h instead of 2π
    let k = (2.0 * std::f64::consts::PI * h).sin() / h;
    let expected = kappa * 0.25 * k * k * 0.5;
    assert!(rel(e, expected) < 1e-12, "{e} vs {expected}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_a_psd_quadratic_form(seed in any::<u64>(), scale in -3.0f64..3.0) {
        let grid = TorusGrid::new(2, 4, 1.0).unwrap();
        let mut r = rng(seed);
        let omega = random_pd(&mut r, 2, 0.5);
        let chi = random_pd(&mut r, 2, 0.1);
        let tilde = random_pd(&mut r, 2, 0.1);
        let field = |m: &hessianlab_core::hermitian::HermitianMatrix| HermitianField::constant(grid, m.clone()).unwrap();
        let bg = BackgroundData::new(field(&omega), field(&chi), field(&tilde), 0.0, 2).unwrap();
        let u = ScalarField::new(grid, (0..grid.len()).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let e = energy_form(&u, &bg, 0.0).unwrap();
        prop_assert!(e >= 0.0);
        let e2 = energy_form(&u.map(|v| scale * v), &bg, 0.0).unwrap();
        prop_assert!((e2 - scale * scale * e).abs() <= 1e-12 * e.max(1e-300) * scale.powi(2).max(1.0));
    }
}

#[test]
fn twin_solves_agree() {
    let bg = flat(8, 1.0);
    let man = manufactured(&bg, 0.5, 0.3, 11);
    let config = SolverConfig::new(2, 0.5);
    let (a, _) = solve_nondegenerate(&bg, &man.f_star, &config).unwrap();
    let noise = smooth_noise(*bg.grid(), 0.01, 4).unwrap();
    let (b, _) = solve_with_initial(&bg, &man.f_star, &config, Some(&noise), &NoClock).unwrap();
    let e = uniqueness_energy_normalized(&a.phi, &b.phi, &bg, 0.5).unwrap();
    assert!(e < 1e-8, "{e}");
    let gap = a.phi.values().iter().zip(b.phi.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 10.0 * config.newton_tol, "{gap}");
}

#[test]
fn monitor_constant_case_and_consistency() {
    let bg = flat(6, 1.0);
    let f = ScalarField::zeros(*bg.grid());
    let (state, _) = solve_nondegenerate(&bg, &f, &SolverConfig::new(2, 0.5)).unwrap();
    let MonitorOutcome::Report(rep) = laplacian_monitor(&state, &bg, 0.5, &f, 2).unwrap() else {
        panic!("monitor skipped")
    };
    assert!((rep.sup_w - 2.0 * 1.5).abs() < 1e-12);
    assert_eq!(rep.a, 1.0);
    assert!(rep.holds);
    let man = manufactured(&bg, 0.5, 0.4, 3);
    let (state, _) = solve_nondegenerate(&bg, &man.f_star, &SolverConfig::new(2, 0.5)).unwrap();
    let MonitorOutcome::Report(rep) = laplacian_monitor(&state, &bg, 0.5, &man.f_star, 2).unwrap() else {
        panic!("monitor skipped")
    };
    assert!(rep.trace_consistency < 1e-11);
    let degenerate = flat(6, 0.0);
    assert!(matches!(laplacian_monitor(&state, &degenerate, 0.5, &man.f_star, 2).unwrap(), MonitorOutcome::Skipped(_)));
}

#[test]
fn monitor_orders_by_data_size() {
    let bg = flat(8, 1.0);
    let sup_w = |bound: f64| {
        let man = manufactured(&bg, 0.5, bound, 5);
        let (state, _) = solve_nondegenerate(&bg, &man.f_star, &SolverConfig::new(2, 0.5)).unwrap();
        match laplacian_monitor(&state, &bg, 0.5, &man.f_star, 2).unwrap() {
            MonitorOutcome::Report(r) => r.sup_w,
            MonitorOutcome::Skipped(s) => panic!("{s}"),
        }
    };
    assert!(sup_w(0.1) < sup_w(0.5));
}

#[test]
fn uniformity_table() {
    let grid = TorusGrid::new(1, 4, 1.0).unwrap();
    let vol = ScalarField::constant(grid, 1.0);
    let zeros = vec![ScalarField::zeros(grid); 3];
    let rep = linf_uniformity_report(&[1.0, 0.5, 0.25], &zeros, &[ScalarField::zeros(grid)], 1.0, &vol).unwrap();
    assert!(rep.rows.iter().all(|r| r.sup_norm == 0.0 && (r.entropy - 1.0).abs() < 1e-14));
    assert!(rep.holds);
    let phis: Vec<ScalarField> = [1.0, 1.2, 0.9, 5.0].iter().map(|&c| ScalarField::constant(grid, -c)).collect();
    let ts = [1.0, 0.5, 0.25, 0.125];
    let full = linf_uniformity_report(&ts, &phis, &[ScalarField::zeros(grid)], 1.0, &vol).unwrap();
    assert!(!full.holds && full.max == 5.0);
    let tail = linf_uniformity_report(&ts[2..], &phis[2..], &[ScalarField::zeros(grid)], 1.0, &vol).unwrap();
    let dropped = phis[..2].iter().map(|p| -p.min()).fold(0.0, f64::max);
    assert!((full.max - tail.max) < dropped.max(full.max));
    assert!(linf_uniformity_report(&[], &[], &[ScalarField::zeros(grid)], 1.0, &vol).is_err());
}

#[test]
fn stability_zero_perturbation_skips_the_fit() {
    let bg = flat(6, 1.0);
    let man = manufactured(&bg, 0.5, 0.3, 1);
    let zero = ScalarField::zeros(*bg.grid());
    let out = stability_experiment(&bg, &man.f_star, &zero, &[0.125, 0.0625], 2.0, 1.0, &SolverConfig::new(2, 0.5)).unwrap();
    assert!(out.fit.is_none());
    assert!(out.records.iter().all(|r| r.sup_gap < 1e-9 && r.l1_gap == 0.0));
}

#[test]
fn stability_bump_family_respects_the_floor() {
    let bg = flat(8, 1.0);
    let man = manufactured(&bg, 0.5, 0.3, 1);
    let bump = RhsGenerator::GaussianBump { center: vec![0.5; 4], width: 0.15, height: 1.0 }.generate(*bg.grid()).unwrap();
    let scales: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let out = stability_experiment(&bg, &man.f_star, &bump, &scales, 2.0, 1.0, &SolverConfig::new(2, 0.5)).unwrap();
    assert!(out.failures.is_empty());
    assert!((out.predicted_exponent - 2.0 / 11.0).abs() < 1e-15);
    let fit = out.fit.unwrap();
    assert!(fit.passes && fit.constant.is_finite(), "{fit:?}");
    assert!((fit.slope - 1.0).abs() < 0.2, "{fit:?}");
    for w in out.records.windows(2) {
        assert!(w[0].sup_gap <= w[1].sup_gap);
    }
}
