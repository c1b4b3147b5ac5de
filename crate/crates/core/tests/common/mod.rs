//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hessianlab_core::algebra::worst_margin;
use hessianlab_core::hermitian::HermitianMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `S_k` by summing products over all `k`-subsets.
pub fn sym_by_subsets(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product::<f64>())
        .sum()
}

/// Determinant by cofactor expansion along the first row.
pub fn det_cofactor(a: &[Complex64], n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if n == 1 {
        return a[0];
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let minor: Vec<Complex64> = (1..n)
            .flat_map(|r| (0..n).filter(move |&c| c != col).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c])
            .collect();
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        acc += a[col] * det_cofactor(&minor, n - 1) * sign;
    }
    acc
}

/// `S_k(λ(A))` as the sum of principal `k × k` minors (cofactor oracle).
pub fn sym_by_minors(a: &[Complex64], n: usize, k: usize) -> f64 {
    let mut acc = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Complex64> = idx.iter().flat_map(|&r| idx.iter().map(move |&c| a[r * n + c])).collect();
        acc += det_cofactor(&sub, k).re;
    }
    acc
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> HermitianMatrix {
    let mut e = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        e[i * n + i] = Complex64::new(rng.random_range(-scale..scale), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            e[i * n + j] = z;
            e[j * n + i] = z.conj();
        }
    }
    HermitianMatrix::from_entries(n, e).unwrap()
}

/// Random positive definite matrix `B B* + c I`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, c: f64) -> HermitianMatrix {
    let b: Vec<Complex64> =
        (0..n * n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut e = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            e[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k].conj()).sum::<Complex64>();
        }
        e[i * n + i] += c;
    }
    // symmetrize rounding
    for i in 0..n {
        e[i * n + i] = Complex64::new(e[i * n + i].re, 0.0);
        for j in i + 1..n {
            let z = 0.5 * (e[i * n + j] + e[j * n + i].conj());
            e[i * n + j] = z;
            e[j * n + i] = z.conj();
        }
    }
    HermitianMatrix::from_entries(n, e).unwrap()
}

/// Rejection sample from `Γ^m ⊂ ℝⁿ` with entries in `[-1, 2]`.
pub fn cone_sample(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<f64> {
    loop {
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        if worst_margin(&l, m) > 0.0 {
            return l;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
