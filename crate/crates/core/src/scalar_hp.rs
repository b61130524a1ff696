//! Scalar Hodrick-Prescott filter and the moment estimators of the noise and
//! signal variances computed from a second-differenced series.
//!
//! Under `x = y + u`, `Py = v` with white `u ~ N(0, mu)` and `v ~ N(0, tau)`,
//! the differenced series `w = Px` satisfies
//!
//! ```text
//! E[w_i^2]       = tau + 6 mu
//! E[w_i w_{i+1}] = -4 mu
//! E[w_i w_{i+2}] = mu
//! ```
//!
//! so `mu_hat = -S1 / (4 (n-3))` and `tau_hat = S0 / (n-2) + 3 S1 / (2 (n-3))`
//! are unbiased, where `S0 = sum w_i^2` and `S1 = sum w_i w_{i+1}`.

use serde::{Deserialize, Serialize};

use crate::diffop::{self, Smoother};
use crate::error::{argument, domain, shape, Result};

/// Smoothing level substituted for components whose signal variance
/// estimate is not positive.
pub const DEFAULT_ALPHA_MAX: f64 = 1e6;

/// Minimum series length accepted by the estimators.
pub const MIN_ESTIMATION_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Ok,
    /// Raw noise estimate was not positive: clamped to zero, no smoothing.
    MuClamped,
    /// Raw signal estimate was not positive: smoothing level undefined.
    TauDegenerate,
}

/// Noise/signal variance estimates for one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarEstimate {
    /// Noise variance estimate, clamped at zero.
    pub mu_hat: f64,
    /// Signal variance estimate (unclamped).
    pub tau_hat: f64,
    /// Noise-to-signal ratio; `None` when the signal estimate is degenerate.
    pub alpha_hat: Option<f64>,
    /// Sum of squared second differences.
    pub s0: f64,
    /// Sum of lag-one products of second differences.
    pub s1: f64,
    /// Length of the undifferenced series.
    pub n: usize,
    pub status: EstimateStatus,
}

impl ScalarEstimate {
    /// Smoothing level to use for filtering: `alpha_hat`, or `alpha_max` when
    /// the signal estimate is degenerate.
    pub fn smoothing_alpha(&self, alpha_max: f64) -> f64 {
        self.alpha_hat.unwrap_or(alpha_max)
    }

    /// `mu_hat` before clamping.
    pub fn raw_mu(&self) -> f64 {
        -self.s1 / (4.0 * (self.n as f64 - 3.0))
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `(S0, S1)` for a differenced series.
pub fn lag_sums(px: &[f64]) -> (f64, f64) {
    let s0 = compensated_sum(px.iter().map(|w| w * w));
    let s1 = compensated_sum(px.windows(2).map(|w| w[0] * w[1]));
    (s0, s1)
}

fn check_differenced(px: &[f64]) -> Result<usize> {
    if px.len() + 2 < MIN_ESTIMATION_LEN {
        return Err(argument(format!(
            "variance estimators need a series of length >= {MIN_ESTIMATION_LEN} \
             ({} second differences), got {}",
            MIN_ESTIMATION_LEN - 2,
            px.len()
        )));
    }
    if let Some(k) = px.iter().position(|v| !v.is_finite()) {
        return Err(argument(format!(
            "non-finite difference at position {}",
            k + 1
        )));
    }
    Ok(px.len() + 2)
}

fn mu_from_sums(s1: f64, n: usize) -> f64 {
    -s1 / (4.0 * (n as f64 - 3.0))
}

fn tau_from_sums(s0: f64, s1: f64, n: usize) -> f64 {
    let n = n as f64;
    // S0/(n-2) + 3 S1/(2(n-3)) over a common (exact, integer) denominator.
    combine(2.0 * (n - 3.0), s0, 3.0 * (n - 2.0), s1) / (2.0 * (n - 2.0) * (n - 3.0))
}

/// `a x + b y` with both products and their sum carried exactly until one
/// final rounding. The two terms nearly cancel when the noise dominates, so
/// naive evaluation loses digits in proportion to the smoothing level.
fn combine(a: f64, x: f64, b: f64, y: f64) -> f64 {
    let p = a * x;
    let ep = a.mul_add(x, -p);
    let q = b * y;
    let eq = b.mul_add(y, -q);
    let s = p + q;
    let z = s - p;
    let es = (p - (s - z)) + (q - z);
    s + (es + ep + eq)
}

/// `sum (x - y)^2 + alpha * sum (Py)^2`.
pub fn hp_objective(x: &[f64], y: &[f64], alpha: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(shape(format!(
            "x has {} entries, y has {}",
            x.len(),
            y.len()
        )));
    }
    let py = diffop::apply_p(y)?;
    let fit: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let penalty: f64 = py.iter().map(|v| v * v).sum();
    Ok(fit + alpha * penalty)
}

/// The HP trend `(I + alpha P'P)^{-1} x`.
pub fn hp_filter(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    Smoother::new(x.len(), alpha)?.apply(x)
}

/// Unbiased noise variance estimate. Can be negative in finite samples.
pub fn estimate_mu(px: &[f64]) -> Result<f64> {
    let n = check_differenced(px)?;
    Ok(mu_from_sums(lag_sums(px).1, n))
}

/// Unbiased signal variance estimate. Can be negative in finite samples.
pub fn estimate_tau(px: &[f64]) -> Result<f64> {
    let n = check_differenced(px)?;
    let (s0, s1) = lag_sums(px);
    Ok(tau_from_sums(s0, s1, n))
}

pub fn estimate_alpha(px: &[f64]) -> Result<ScalarEstimate> {
    let n = check_differenced(px)?;
    let (s0, s1) = lag_sums(px);
    Ok(classify(s0, s1, n))
}

fn classify(s0: f64, s1: f64, n: usize) -> ScalarEstimate {
    let mu = mu_from_sums(s1, n);
    let tau = tau_from_sums(s0, s1, n);
    let (mu_hat, alpha_hat, status) = if !(mu > 0.0) {
        (0.0, Some(0.0), EstimateStatus::MuClamped)
    } else if !(tau > 0.0) {
        (mu, None, EstimateStatus::TauDegenerate)
    } else {
        (mu, Some(mu / tau), EstimateStatus::Ok)
    };
    ScalarEstimate {
        mu_hat,
        tau_hat: tau,
        alpha_hat,
        s0,
        s1,
        n,
        status,
    }
}

/// Estimates from an undifferenced series.
///
/// A series that is affine up to rounding (second differences at the level
/// of floating-point noise relative to the data) is treated as having exactly
/// zero differences, so it reports `MuClamped` deterministically.
pub fn estimate_from_series(x: &[f64]) -> Result<ScalarEstimate> {
    let px = diffop::apply_p(x)?;
    let n = check_differenced(&px)?;
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let noise_floor = 64.0 * f64::EPSILON * scale;
    if px.iter().all(|w| w.abs() <= noise_floor) {
        return Ok(classify(0.0, 0.0, n));
    }
    let (s0, s1) = lag_sums(&px);
    Ok(classify(s0, s1, n))
}

/// Closed-form ratio estimator written directly in terms of the lag sums:
/// `-(1/4) (3/2 + (n-3) S0 / ((n-2) S1))^{-1}`. `None` when `S1 = 0`.
pub fn alpha_closed_form(px: &[f64]) -> Result<Option<f64>> {
    let n = check_differenced(px)? as f64;
    let (s0, s1) = lag_sums(px);
    if s1 == 0.0 {
        return Ok(None);
    }
    // -1/4 (3/2 + A/B)^{-1} with A = (n-3) S0, B = (n-2) S1, evaluated as
    // -B / (4 (3/2 B + A)) so that the cancellation is resolved exactly.
    let b = (n - 2.0) * s1;
    let denom = combine(1.5 * (n - 2.0), s1, n - 3.0, s0);
    Ok(Some(-b / (4.0 * denom)))
}

/// Exact variance of the noise estimator for a series of length `n`.
pub fn mu_estimator_variance(mu: f64, tau: f64, n: usize) -> Result<f64> {
    if !(mu > 0.0) || !(tau > 0.0) {
        return Err(domain(format!(
            "variances must be positive, got mu = {mu}, tau = {tau}"
        )));
    }
    if n < 6 {
        return Err(argument(format!("variance formula needs n >= 6, got {n}")));
    }
    let k = n as f64;
    let bracket = (k - 3.0) * (tau * tau + 12.0 * tau * mu + 52.0 * mu * mu)
        + 2.0 * (k - 4.0) * (tau * mu + 22.0 * mu * mu)
        + 2.0 * (k - 5.0) * mu * mu;
    Ok(bracket / (16.0 * (k - 3.0) * (k - 3.0)))
}
