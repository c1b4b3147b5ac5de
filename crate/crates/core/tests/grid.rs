mod common;

use common::*;
use hessianlab_core::generators::TrigPolynomial;
use hessianlab_core::grid::*;
use hessianlab_core::hermitian::HermitianMatrix;
use num_complex::Complex64;

fn max_entry_error(a: &HermitianField, b: &HermitianField) -> f64 {
    let nn = a.grid().dim().pow(2);
    (0..a.grid().len())
        .flat_map(|p| (0..nn).map(move |k| (p, k)))
        .map(|(p, k)| (a.at(p)[k] - b.at(p)[k]).norm())
        .fold(0.0, f64::max)
}

#[test]
fn finite_difference_hessian_is_second_order() {
    let poly = TrigPolynomial::random(2, 1.0, 1, 5, 1.0, 7).unwrap();
    let errs: Vec<f64> = [8usize, 16]
        .iter()
        .map(|&np| {
            let grid = TorusGrid::new(2, np, 1.0).unwrap();
            let fd = complex_hessian(&poly.sample(grid));
            max_entry_error(&fd, &poly.sample_complex_hessian(grid))
        })
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!((1.8..=2.2).contains(&order), "observed order {order} from {errs:?}");
}

#[test]
fn spectral_hessian_is_exact_for_resolved_modes() {
    let poly = TrigPolynomial::random(2, 2.0, 2, 6, 1.0, 8).unwrap();
    let grid = TorusGrid::new(2, 8, 2.0).unwrap();
    let sp = spectral_complex_hessian(&poly.sample(grid));
    assert!(max_entry_error(&sp, &poly.sample_complex_hessian(grid)) < 1e-11);
}

#[test]
fn discrete_hessian_is_hermitian_with_zero_mean() {
    let grid = TorusGrid::new(2, 8, 1.0).unwrap();
    let mut r = rng(9);
    use rand::Rng;
    let u = ScalarField::new(grid, (0..grid.len()).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    let h = complex_hessian(&u);
    let n = 2;
    let mut mean = [Complex64::new(0.0, 0.0); 4];
    for p in 0..grid.len() {
        let b = h.at(p);
        for i in 0..n {
            assert_eq!(b[i * n + i].im, 0.0);
            for j in 0..n {
                assert_eq!(b[i * n + j], b[j * n + i].conj());
                mean[i * n + j] += b[i * n + j];
            }
        }
    }
    for z in mean {
        assert!(z.norm() / grid.len() as f64 * grid.spacing().powi(2) < 1e-10);
    }
}

#[test]
fn laplacian_is_self_adjoint() {
    let grid = TorusGrid::new(2, 8, 1.0).unwrap();
    let mut r = rng(10);
    use rand::Rng;
    let omega = random_pd(&mut r, 2, 0.5);
    let winv = omega.inverse_pd().unwrap();
    let volume = ScalarField::constant(grid, omega.det());
    let lap = |u: &ScalarField| {
        let h = complex_hessian(u);
        let vals = (0..grid.len())
            .map(|p| {
                let b = h.at(p);
                let w = winv.entries();
                (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (w[i * 2 + j] * b[j * 2 + i]).re).sum()
            })
            .collect();
        ScalarField::new(grid, vals).unwrap()
    };
    let u = ScalarField::new(grid, (0..grid.len()).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    let v = ScalarField::new(grid, (0..grid.len()).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    let a = integrate(&u.zip_map(&lap(&v), |x, y| x * y), &volume);
    let b = integrate(&v.zip_map(&lap(&u), |x, y| x * y), &volume);
    assert!(rel(a, b) < 1e-9, "{a} vs {b}");
}

#[test]
fn integration_is_reproducible_and_accurate() {
    let grid = TorusGrid::new(2, 12, 2.0).unwrap();
    let g = ScalarField::from_fn(grid, |x| 1.0 + (std::f64::consts::PI * x[0]).cos() * x[3].sin());
    let vol = ScalarField::constant(grid, 1.0);
    let first = integrate(&g, &vol);
    for _ in 0..5 {
        assert_eq!(integrate(&g.clone(), &vol).to_bits(), first.to_bits());
    }
    // ∫ (1 + cos(πx₁) sin(y₂)) over [0,2)⁴: the cos term integrates to zero exactly
    assert!((first - 16.0).abs() < 1e-12);
}

#[test]
fn norms_and_mollifier() {
    let grid = TorusGrid::new(1, 16, 1.0).unwrap();
    let vol = ScalarField::constant(grid, 1.0);
    let g = ScalarField::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0]).sin());
    let l2 = lp_norm(&g, 2.0, &vol).unwrap();
    assert!((l2 - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((lp_norm(&g, f64::INFINITY, &vol).unwrap() - 1.0).abs() < 1e-12);
    let smooth = mollify(&g, 0.15).unwrap();
    assert!((smooth.mean() - g.mean()).abs() < 1e-14);
    // a Gaussian of width σ damps the first mode by exp(−2π²σ²)
    let damp = (-2.0 * std::f64::consts::PI.powi(2) * 0.15f64.powi(2)).exp();
    assert!((smooth.max() - damp).abs() < 1e-10, "{} vs {damp}", smooth.max());
    let c = ScalarField::constant(grid, 3.0);
    assert!(mollify(&c, 0.2).unwrap().values().iter().all(|v| (v - 3.0).abs() < 1e-14));
}

#[test]
fn eigen_field_of_constant_pencil() {
    let grid = TorusGrid::new(2, 4, 1.0).unwrap();
    let a = HermitianField::constant(grid, HermitianMatrix::diag(&[3.0, 1.0]).unwrap()).unwrap();
    let g = HermitianField::constant(grid, HermitianMatrix::diag(&[1.0, 0.5]).unwrap()).unwrap();
    let e = eigen_field(&a, &g).unwrap();
    for p in 0..grid.len() {
        assert!((e.at(p)[0] - 3.0).abs() < 1e-14 && (e.at(p)[1] - 2.0).abs() < 1e-14);
    }
}
