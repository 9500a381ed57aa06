//! Uniform-null simulation of calibration-set fluctuations.
//!
//! For continuous scores the conditional FPR of a threshold picked from `n`
//! calibration scores depends on the data only through uniform order
//! statistics. Every routine here therefore draws uniform calibration sets and
//! evaluates conditional quantities exactly from their order statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrections::{BoundSequence, CorrectionMethod};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::scalar::{floor_tolerant, total_cmp, Real};
use crate::special::regularized_incomplete_beta;

/// Draws of the conditional mass `F(tau; D_cal)` over simulated calibration sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationDraws<T> {
    pub n_cal: usize,
    pub tau: T,
    pub ell: usize,
    pub draws: Vec<T>,
    pub seed: u64,
}

impl<T: Real> FluctuationDraws<T> {
    pub fn mean(&self) -> T {
        self.draws.iter().copied().sum::<T>() / T::from_count(self.draws.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub method: CorrectionMethod,
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
}

/// Parameters `(ell, n_cal + 1 - ell)` of the Beta law of the conditional
/// mass, with `ell = floor((n_cal + 1) tau)`.
pub fn beta_parameters<T: Real>(n_cal: usize, tau: T) -> Result<(u64, u64)> {
    if n_cal == 0 {
        return Err(Error::domain("calibration size must be positive"));
    }
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    let ell = floor_tolerant(T::from_count(n_cal + 1) * tau)
        .to_u64()
        .unwrap_or(0);
    if ell == 0 {
        return Err(Error::domain(format!(
            "tau = {tau} is below 1/(n_cal + 1) for n_cal = {n_cal}"
        )));
    }
    Ok((ell, n_cal as u64 + 1 - ell))
}

/// Simulates `trials` calibration sets of `n_cal` uniform scores and records
/// `F = 1 - s_(n_cal - ell + 1)` for each: the exact probability that a fresh
/// null test point receives a marginal p-value of at most `tau`.
pub fn simulate_fpr_distribution<T: Real>(
    n_cal: usize,
    tau: T,
    trials: usize,
    seed: u64,
) -> Result<FluctuationDraws<T>> {
    let (ell, _) = beta_parameters(n_cal, tau)?;
    let ell = ell as usize;
    let draws = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s: Vec<T> = rng::sorted_uniforms(seed, Purpose::FluctuationTrial, t, n_cal);
            T::one() - s[n_cal - ell]
        })
        .collect();
    Ok(FluctuationDraws {
        n_cal,
        tau,
        ell,
        draws,
        seed,
    })
}

/// CDF of `Beta(alpha, beta)` at `x` for integer parameters.
pub fn beta_cdf<T: Real>(alpha: u64, beta: u64, x: T) -> Result<T> {
    regularized_incomplete_beta(alpha, beta, x)
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `draws` and `Beta(alpha, beta)`.
pub fn ks_distance<T: Real>(draws: &[T], alpha: u64, beta: u64) -> Result<T> {
    if draws.is_empty() {
        return Err(Error::Empty("draws"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_unstable_by(total_cmp);
    let m = T::from_count(sorted.len());
    let mut sup = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = beta_cdf(alpha, beta, x.max(T::zero()).min(T::one()))?;
        let above = T::from_count(i + 1) / m - cdf;
        let below = cdf - T::from_count(i) / m;
        sup = sup.max(above).max(below);
    }
    Ok(sup)
}

/// Does this sorted null calibration set break the uniform guarantee?
///
/// On the threshold interval where the empirical FPR equals `k / n` the true
/// FPR climbs to `1 - s_(n-k)` (with `s_(0) = 0`), so checking each `k`
/// against the corrected level is exact for the all-thresholds event.
fn violates<T: Real>(bounds: &BoundSequence<T>, sorted: &[T]) -> bool {
    let n = sorted.len();
    (0..n).any(|k| T::one() - sorted[n - 1 - k] > bounds.at_count(k))
}

/// Fraction of simulated null calibration sets for which the corrected
/// empirical FPR underestimates the true FPR at some threshold.
pub fn guarantee_violation_rate<T: Real>(
    bounds: &BoundSequence<T>,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport> {
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    let n = bounds.n();
    let violations = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let s: Vec<T> = rng::sorted_uniforms(seed, Purpose::NullTrial, t, n);
            violates(bounds, &s)
        })
        .count();
    Ok(ViolationReport {
        method: bounds.method(),
        n,
        delta: bounds.delta().to_f64_lossy(),
        trials,
        violations,
        rate: violations as f64 / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrections::dkwm_bounds;

    #[test]
    fn beta_parameter_examples() {
        assert_eq!(beta_parameters(10_000, 0.1f64).unwrap(), (1000, 9001));
        assert_eq!(beta_parameters(999, 0.5f64).unwrap(), (500, 500));
        assert_eq!(beta_parameters(9, 0.1f64).unwrap(), (1, 9));
        assert!(beta_parameters(99, 0.005f64).is_err());
        assert!(beta_parameters(99, 1.0f64).is_err());
        assert!(beta_parameters(0, 0.5f64).is_err());
    }

    #[test]
    fn single_point_calibration_is_uniform() {
        let d = simulate_fpr_distribution(1, 0.5f64, 4000, 3).unwrap();
        assert_eq!(d.ell, 1);
        assert!(ks_distance(&d.draws, 1, 1).unwrap() < 0.03);
    }

    #[test]
    fn ks_distance_examples() {
        // Draws at the uniform quantiles i/(N+1).
        let n = 200;
        let q: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let d = ks_distance(&q, 1, 1).unwrap();
        assert!(d <= 1.0 / n as f64 + 1e-12);
        assert!(ks_distance(&[0.5f64], 1, 1).unwrap() <= 0.5);
        let zeros = vec![0.0f64; 10];
        assert!((ks_distance(&zeros, 1000, 9001).unwrap() - 1.0).abs() < 1e-12);
        assert!(ks_distance::<f64>(&[], 1, 1).is_err());
    }

    #[test]
    fn all_ones_bounds_never_violate() {
        let b = BoundSequence::from_values(vec![1.0f64; 50], 0.1, CorrectionMethod::Dkwm).unwrap();
        let r = guarantee_violation_rate(&b, 500, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn rejects_zero_trials() {
        let b = dkwm_bounds(10, 0.1f64).unwrap();
        assert!(guarantee_violation_rate(&b, 0, 1).is_err());
    }
}
