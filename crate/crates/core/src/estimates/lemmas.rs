//! The two iteration lemmas as numeric statements: closed-form bounds plus a
//! brute-force certification of their hypotheses on sampled functions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
// unused when a dependency links std, whose inherent float methods win
#[allow(unused_imports)]
use num_traits::Float;

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(alloc::format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// Lower bound `(s0 (1 − 2^{−δ0}) / (2 C0))^{1/δ0}` for `φ(s0)` when `φ` is
/// increasing, vanishes at `0+` and satisfies `t φ(s − t) ≤ C0 φ(s)^{1+δ0}`.
pub fn kolodziej_bound(c0: f64, delta0: f64, s0: f64) -> Result<f64> {
    check_positive(&[("C0", c0), ("delta0", delta0), ("s0", s0)])?;
    Ok((s0 * (1.0 - 2f64.powf(-delta0)) / (2.0 * c0)).powf(1.0 / delta0))
}

/// Vanishing threshold `d = C^{1/α} φ(s0)^{δ/α} 2^{(1+δ)/δ}`: under
/// `s'^α φ(s' + s) ≤ C φ(s)^{1+δ}` the level function is zero from `s0 + d` on.
pub fn degiorgi_threshold(c: f64, alpha: f64, delta: f64, phi_s0: f64) -> Result<f64> {
    check_positive(&[("C", c), ("alpha", alpha), ("delta", delta)])?;
    if !(phi_s0 >= 0.0) || !phi_s0.is_finite() {
        return Err(Error::Domain(alloc::format!("phi(s0) must be nonnegative and finite, got {phi_s0}")));
    }
    if phi_s0 == 0.0 {
        return Ok(0.0);
    }
    Ok(c.powf(1.0 / alpha) * phi_s0.powf(delta / alpha) * 2f64.powf((1.0 + delta) / delta))
}

/// Which lemma a sampled function is tested against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LemmaForm {
    /// `t φ(s − t) ≤ C0 φ(s)^{1+δ0}` for `0 < t < s ≤ s0`, `φ` increasing and
    /// positive.
    Kolodziej { delta0: f64 },
    /// `s'^α φ(s' + s) ≤ C φ(s)^{1+δ}` for `s' > 0`, `s ≥ s0`, `φ`
    /// nonnegative and nonincreasing (the level-mass direction).
    DeGiorgi { alpha: f64, delta: f64 },
}

/// A monotone function sampled at increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationHypothesis {
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    pub form: LemmaForm,
}

/// Smallest constant for which the lemma hypothesis holds on all sample
/// pairs; `feasible` is false when the samples break the monotonicity or sign
/// requirement (then `c_min` is NaN).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub c_min: f64,
    pub feasible: bool,
}

impl IterationHypothesis {
    pub fn new(s: Vec<f64>, phi: Vec<f64>, form: LemmaForm) -> Result<Self> {
        if s.len() != phi.len() {
            return Err(Error::Dimension(alloc::format!("{} abscissae but {} values", s.len(), phi.len())));
        }
        if s.len() < 3 {
            return Err(Error::Domain("certification needs at least 3 samples".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::Domain("abscissae must be finite and strictly increasing".into()));
        }
        match form {
            LemmaForm::Kolodziej { delta0 } => check_positive(&[("delta0", delta0)])?,
            LemmaForm::DeGiorgi { alpha, delta } => check_positive(&[("alpha", alpha), ("delta", delta)])?,
        }
        Ok(IterationHypothesis { s, phi, form })
    }

    /// See [`certify_iteration_hypothesis`].
    pub fn certify(&self) -> Certification {
        certify_iteration_hypothesis(&self.s, &self.phi, self.form)
    }

    /// The lemma's conclusion evaluated with the certified constant: the
    /// lower bound for `φ(s0)` (last sample) or the vanishing threshold
    /// measured from the first sample.
    pub fn conclusion(&self, cert: &Certification) -> Result<f64> {
        if !cert.feasible {
            return Err(Error::Domain("hypothesis not certified".into()));
        }
        match self.form {
            LemmaForm::Kolodziej { delta0 } => {
                let s0 = *self.s.last().unwrap_or(&0.0);
                kolodziej_bound(cert.c_min, delta0, s0)
            }
            LemmaForm::DeGiorgi { alpha, delta } => {
                if self.phi[0] == 0.0 {
                    return Ok(0.0);
                }
                degiorgi_threshold(cert.c_min, alpha, delta, self.phi[0])
            }
        }
    }
}

/// Exhaustive search over sample pairs `j < k` for the minimal lemma constant.
///
/// Kolodziej form: `max (s_k − s_j) φ_j / φ_k^{1+δ0}` (with `t = s_k − s_j`,
/// `s = s_k`). De Giorgi form: `max (s_k − s_j)^α φ_k / φ_j^{1+δ}` (with
/// `s = s_j`, `s' = s_k − s_j`); pairs with `φ_j = 0` contribute nothing since
/// then `φ_k = 0` as well.
pub fn certify_iteration_hypothesis(s: &[f64], phi: &[f64], form: LemmaForm) -> Certification {
    let infeasible = Certification { c_min: f64::NAN, feasible: false };
    if s.len() != phi.len() || s.len() < 3 || s.windows(2).any(|w| !(w[1] > w[0])) {
        return infeasible;
    }
    let k = s.len();
    let mut c: f64 = 0.0;
    match form {
        LemmaForm::Kolodziej { delta0 } => {
            if phi.iter().any(|&v| !(v > 0.0)) || phi.windows(2).any(|w| w[1] < w[0]) {
                return infeasible;
            }
            for hi in 1..k {
                let denom = phi[hi].powf(1.0 + delta0);
                for lo in 0..hi {
                    c = c.max((s[hi] - s[lo]) * phi[lo] / denom);
                }
            }
        }
        LemmaForm::DeGiorgi { alpha, delta } => {
            if phi.iter().any(|&v| !(v >= 0.0)) || phi.windows(2).any(|w| w[1] > w[0]) {
                return infeasible;
            }
            for lo in 0..k {
                if phi[lo] == 0.0 {
                    break;
                }
                let denom = phi[lo].powf(1.0 + delta);
                for hi in lo + 1..k {
                    if phi[hi] == 0.0 {
                        break;
                    }
                    c = c.max((s[hi] - s[lo]).powf(alpha) * phi[hi] / denom);
                }
            }
        }
    }
    Certification { c_min: c, feasible: c.is_finite() }
}

/// Result of checking a lemma's conclusion on a sampled family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    pub certification: Certification,
    /// Lower bound on `φ(s0)` or vanishing threshold `d`.
    pub conclusion: f64,
    /// Kolodziej: `φ(s0) − bound`; De Giorgi: `−max{φ(s) : s ≥ s0 + d}`
    /// (0 when no sample lies beyond the threshold).
    pub slack: f64,
    pub holds: bool,
}

/// Certifies the hypothesis and evaluates the conclusion with tolerance
/// `tol`. Returns `None` when the family is not certified.
pub fn verify_lemma(h: &IterationHypothesis, tol: f64) -> Option<LemmaCheck> {
    let cert = h.certify();
    let conclusion = h.conclusion(&cert).ok()?;
    let slack = match h.form {
        LemmaForm::Kolodziej { .. } => h.phi[h.phi.len() - 1] - conclusion,
        LemmaForm::DeGiorgi { .. } => {
            let edge = h.s[0] + conclusion;
            let worst = h.s.iter().zip(&h.phi).filter(|(s, _)| **s >= edge).map(|(_, p)| *p).fold(0.0, f64::max);
            -worst
        }
    };
    Some(LemmaCheck { certification: cert, conclusion, slack, holds: slack >= -tol })
}

/// Seeded synthetic family for which the lemma hypothesis holds with a
/// finite constant: `φ = a s^p` on `(0, s0]` with `δ0 ≤ 1/p` (Kolodziej), or
/// `φ = a (1 − (s − s0)/L)_+^p` on `[s0, s0 + 10L]` with `α ≥ pδ` (De Giorgi).
/// `samples` abscissae are uniform.
pub fn synthetic_family(kolodziej: bool, samples: usize, seed: u64) -> Result<IterationHypothesis> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k = samples.max(3);
    let a = 10f64.powf(rng.random_range(-1.0..1.0));
    let p = rng.random_range(0.5..3.0);
    if kolodziej {
        let s0 = rng.random_range(0.5..5.0);
        let delta0 = rng.random_range(0.3..=1.0) / p;
        let s: Vec<f64> = (1..=k).map(|i| s0 * i as f64 / k as f64).collect();
        let phi = s.iter().map(|&x| a * x.powf(p)).collect();
        IterationHypothesis::new(s, phi, LemmaForm::Kolodziej { delta0 })
    } else {
        let s0 = rng.random_range(0.0..2.0);
        let len = rng.random_range(0.2..3.0);
        let delta = rng.random_range(0.5..2.0);
        let alpha = p * delta * rng.random_range(1.0..2.0);
        let s: Vec<f64> = (0..k).map(|i| s0 + 10.0 * len * i as f64 / (k - 1) as f64).collect();
        let phi = s.iter().map(|&x| a * (1.0 - (x - s0) / len).max(0.0).powf(p)).collect();
        IterationHypothesis::new(s, phi, LemmaForm::DeGiorgi { alpha, delta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn closed_forms() {
        assert!((kolodziej_bound(1.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        for d in [0.3, 1.0, 2.5] {
            let s0 = 1.7;
            let c0 = 0.5 * (1.0 - 2f64.powf(-d)) * s0;
            assert!((kolodziej_bound(c0, d, s0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(degiorgi_threshold(1.0, 1.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(degiorgi_threshold(1.0, 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(kolodziej_bound(0.0, 1.0, 1.0).is_err());
        assert!(degiorgi_threshold(1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn linear_function_constant_is_one_quarter() {
        let s: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
        let cert = certify_iteration_hypothesis(&s, &s, LemmaForm::Kolodziej { delta0: 1.0 });
        assert!(cert.feasible);
        assert!((cert.c_min - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_function_attains_at_longest_pair() {
        let s: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let phi = vec![2.0; 10];
        let cert = certify_iteration_hypothesis(&s, &phi, LemmaForm::Kolodziej { delta0: 1.0 });
        assert!((cert.c_min - 0.9 * 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_violations_are_infeasible() {
        let s = [0.1, 0.2, 0.3, 0.4];
        let bumpy = [0.1, 0.3, 0.2, 0.4];
        assert!(!certify_iteration_hypothesis(&s, &bumpy, LemmaForm::Kolodziej { delta0: 1.0 }).feasible);
        let rising = [0.0, 0.1, 0.2, 0.3];
        assert!(!certify_iteration_hypothesis(&s, &rising, LemmaForm::DeGiorgi { alpha: 1.0, delta: 1.0 }).feasible);
        assert!(IterationHypothesis::new(vec![0.0, 1.0], vec![1.0, 1.0], LemmaForm::Kolodziej { delta0: 1.0 }).is_err());
    }

    #[test]
    fn synthetic_families_satisfy_lemmas() {
        for seed in 0..20 {
            for kol in [true, false] {
                let h = synthetic_family(kol, 300, seed).unwrap();
                let check = verify_lemma(&h, 1e-12).unwrap();
                assert!(check.holds, "seed {seed} kolodziej {kol}: {check:?}");
            }
        }
    }

    #[test]
    fn degiorgi_tight_family_vanishes_at_threshold() {
        // φ = (1 − s)_+ with α = δ = 1: C = 1/4 and d = 1 exactly.
        let s: Vec<f64> = (0..=400).map(|i| i as f64 / 200.0).collect();
        let phi: Vec<f64> = s.iter().map(|&x| (1.0 - x).max(0.0)).collect();
        let h = IterationHypothesis::new(s, phi, LemmaForm::DeGiorgi { alpha: 1.0, delta: 1.0 }).unwrap();
        let cert = h.certify();
        assert!((cert.c_min - 0.25).abs() < 1e-15);
        assert!((h.conclusion(&cert).unwrap() - 1.0).abs() < 1e-15);
    }
}
