//! Fixed-tree pairwise reductions.
//!
//! The combining tree depends only on the slice length, so results are
//! bit-identical across runs and independent of any worker scheduling done
//! by callers that produce the summands.

const LEAF: usize = 32;

/// Pairwise sum with a fixed split at `len / 2` down to 32-element leaves.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` over `0..len` without materializing the summands.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, len, f)
}

/// Deterministic maximum (NaN-propagating).
pub fn max_of(values: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        if v > m {
            m = v;
        }
    }
    m
}

pub fn min_of(values: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for &v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        if v < m {
            m = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn matches_closure_form() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum_by(v.len(), &|i| v[i]).to_bits());
    }

    #[test]
    fn exact_on_integers() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(max_of(&v), 100.0);
        assert_eq!(min_of(&v), 1.0);
    }
}
