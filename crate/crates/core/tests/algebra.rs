#![allow(clippy::needless_range_loop)]
mod common;

use common::*;
use hessianlab_core::algebra::*;
use hessianlab_core::hermitian::{generalized_eigenvalues, HermitianMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn vieta_matches_subset_enumeration() {
    let mut r = rng(1);
    for _ in 0..1000 {
        let n = r.random_range(1..=6);
        let l: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let all = elem_sym_all(&l, n);
        for k in 0..=n {
            let oracle = sym_by_subsets(&l, k);
            let scale: f64 = l.iter().map(|v| v.abs().max(1.0)).product();
            assert!((all[k] - oracle).abs() <= 1e-12 * scale, "n={n} k={k}: {} vs {oracle}", all[k]);
            assert_eq!(elem_sym(&l, k).unwrap(), all[k]);
        }
    }
}

#[test]
fn minors_match_eigenvalues() {
    let mut r = rng(2);
    for _ in 0..1000 {
        let n = r.random_range(2..=5);
        let a = random_hermitian(&mut r, n, 2.0);
        let eig = a.eigenvalues();
        for k in 1..=n {
            let via_eig = elem_sym(&eig, k).unwrap();
            let via_minors = a.elem_sym_minors(k).unwrap();
            let oracle = sym_by_minors(a.entries(), n, k);
            let scale = eig.iter().map(|v| v.abs()).fold(1.0, f64::max).powi(k as i32) * binom(n, k);
            assert!((via_eig - oracle).abs() <= 1e-10 * scale, "n={n} k={k}: {via_eig} vs {oracle}");
            assert!((via_minors - oracle).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn gradient_and_hessian_match_finite_differences() {
    let mut r = rng(3);
    for _ in 0..200 {
        let n = r.random_range(2..=5);
        let m = r.random_range(2..=n);
        let l: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..2.0)).collect();
        let g = grad_elem_sym(&l, m).unwrap();
        let h = hess_elem_sym(&l, m).unwrap();
        let eps = 1e-5;
        for i in 0..n {
            let mut lp = l.clone();
            let mut lm = l.clone();
            lp[i] += eps;
            lm[i] -= eps;
            let fd = (elem_sym(&lp, m).unwrap() - elem_sym(&lm, m).unwrap()) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-7, "grad");
            let gp = grad_elem_sym(&lp, m).unwrap();
            let gm = grad_elem_sym(&lm, m).unwrap();
            for j in 0..n {
                assert!(((gp[j] - gm[j]) / (2.0 * eps) - h[j * n + i]).abs() < 1e-7, "hess");
            }
        }
    }
}

#[test]
fn generalized_eigenvalues_are_congruence_invariant() {
    let mut r = rng(4);
    for _ in 0..300 {
        let n = r.random_range(2..=5);
        let a = random_hermitian(&mut r, n, 2.0);
        let g = random_pd(&mut r, n, 0.5);
        let p: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let d = if k % (n + 1) == 0 { 2.0 } else { 0.0 };
                Complex64::new(d + r.random_range(-0.5..0.5), r.random_range(-0.5..0.5))
            })
            .collect();
        let base = generalized_eigenvalues(&a, &g).unwrap();
        let moved = generalized_eigenvalues(&a.congruence(&p), &g.congruence(&p)).unwrap();
        for (x, y) in base.iter().zip(moved.iter()) {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn generalized_eigenvalues_of_scaled_identity() {
    let g = HermitianMatrix::diag(&[2.0, 4.0]).unwrap();
    let a = HermitianMatrix::diag(&[6.0, 4.0]).unwrap();
    let l = generalized_eigenvalues(&a, &g).unwrap();
    assert!((l[0] - 3.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
}

fn cone_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize, f64)> {
    (2usize..=5)
        .prop_flat_map(|n| (Just(n), 1..=n, any::<u64>(), 0.0f64..1.0))
        .prop_map(|(n, m, seed, theta)| {
            let mut r = rng(seed);
            (cone_sample(&mut r, n, m), cone_sample(&mut r, n, m), m, theta)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn euler_identity((l, _eta, m, _theta) in cone_case()) {
        let g = grad_elem_sym(&l, m).unwrap();
        let lhs: f64 = l.iter().zip(&g).map(|(a, b)| a * b).sum();
        let scale: f64 = l.iter().zip(&g).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1e-300);
        let rhs = m as f64 * elem_sym(&l, m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale);
    }

    #[test]
    fn maclaurin_and_garding_hold((l, eta, m, _theta) in cone_case()) {
        prop_assert!(check_maclaurin(&l, m).unwrap() >= -1e-10);
        prop_assert!(check_garding(&l, &eta, m).unwrap() >= -1e-10);
        prop_assert!(check_garding(&l, &l, m).unwrap().abs() < 1e-10 * (1.0 + elem_sym(&l, m).unwrap().abs()));
    }

    #[test]
    fn operator_is_concave((l, eta, m, theta) in cone_case()) {
        let mix: Vec<f64> = l.iter().zip(&eta).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        let f = |x: &[f64]| hessian_operator(x, m).unwrap();
        prop_assert!(f(&mix) >= theta * f(&l) + (1.0 - theta) * f(&eta) - 1e-10);
    }

    #[test]
    fn cone_is_monotone((l, eta, m, _theta) in cone_case()) {
        let plus: Vec<f64> = l.iter().zip(&eta).map(|(a, b)| a + b.abs()).collect();
        prop_assert!(worst_margin(&plus, m) > 0.0);
        let spec = ConeSpec::new(l.len(), m, 0.0).unwrap();
        prop_assert!(cone_membership(&plus, &spec).0);
        prop_assert!(grad_elem_sym(&l, m).unwrap().iter().all(|&g| g > 0.0));
    }

    #[test]
    fn maclaurin_chain_bounds_operator((l, _eta, m, _theta) in cone_case()) {
        let n = l.len() as f64;
        let s1: f64 = l.iter().sum();
        prop_assert!(hessian_operator(&l, m).unwrap() <= s1 / n + 1e-12);
    }
}
