//! Convergence-rate predictions and empirical rate fitting.
//!
//! Predictions are for the average regret `R_T / T` as a power of the
//! horizon: `R_T / T = O(T^-exponent * (ln T)^log_power)`. The fixed-grid
//! policy's exponent clamps the packing growth at 1; the adaptive policy's
//! does not, which is exactly where it wins. The minimax lower bound
//! shares the adaptive exponent (no log factor), so the adaptive policy is
//! optimal up to logs. Cumulative-regret exponents are `1 - exponent` and
//! are derived at reporting time, never stored.

use crate::error::{Error, Result};
use crate::objective::check_beta_bound;

/// Which bound a prediction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateSource {
    SimpleSplitting,
    AdaptiveSplitting,
    MinimaxLowerBound,
}

/// A predicted average-regret rate `T^-exponent * (ln T)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    pub exponent: f64,
    pub log_power: f64,
    pub source: RateSource,
}

fn validate_rate_inputs(alpha: f64, beta: f64, d: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::config("alpha", format!("alpha {alpha} must lie in (0, 2]")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::config("beta", format!("beta {beta} must be nonnegative and finite")));
    }
    if d == 0 {
        return Err(Error::config("d", "dimension must be at least 1"));
    }
    check_beta_bound(alpha, beta, d)
}

/// Average-regret rate of the fixed-grid policy at its best bin length.
/// Packing growth is clamped at 1: beyond that the grid cannot exploit it.
pub fn rate_simple(alpha: f64, beta: f64, d: usize) -> Result<RatePrediction> {
    validate_rate_inputs(alpha, beta, d)?;
    let b = beta.min(1.0);
    Ok(RatePrediction {
        exponent: alpha / (d as f64 + 2.0 * alpha - alpha * b),
        log_power: 1.0 / (2.0 - b),
        source: RateSource::SimpleSplitting,
    })
}

/// Average-regret rate of the adaptive policy, using the full packing
/// growth `beta`.
pub fn rate_adaptive(alpha: f64, beta: f64, d: usize) -> Result<RatePrediction> {
    validate_rate_inputs(alpha, beta, d)?;
    Ok(RatePrediction {
        exponent: alpha / (d as f64 + 2.0 * alpha - alpha * beta),
        log_power: beta + 1.0,
        source: RateSource::AdaptiveSplitting,
    })
}

/// Minimax lower bound over all policies: same exponent as the adaptive
/// policy, with no log factor.
pub fn rate_minimax(alpha: f64, beta: f64, d: usize) -> Result<RatePrediction> {
    let adaptive = rate_adaptive(alpha, beta, d)?;
    Ok(RatePrediction { exponent: adaptive.exponent, log_power: 0.0, source: RateSource::MinimaxLowerBound })
}

/// Bin length minimizing the fixed-grid policy's predicted regret:
/// `T^(-1 / (d + 2 alpha - alpha beta))`, in units of the domain's side
/// length (proportionality constant 1 by convention; callers multiply by
/// the actual side).
pub fn optimal_bin_length(alpha: f64, beta: f64, d: usize, horizon: u64) -> Result<f64> {
    validate_rate_inputs(alpha, beta, d)?;
    if horizon < 2 {
        return Err(Error::config(
            "horizon",
            format!("horizon {horizon} is too short to prescribe a bin length"),
        ));
    }
    Ok((horizon as f64).powf(-1.0 / (d as f64 + 2.0 * alpha - alpha * beta)))
}

/// Least-squares line fit, returning `(slope, intercept)`.
pub(crate) fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

/// A fitted log-log rate: `value ~ exp(intercept) * T^slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

/// Fits `log(value)` against `log(horizon)` by least squares.
///
/// Needs at least 3 points with distinct horizons and strictly positive
/// values. On exact power-law inputs the slope is recovered to float
/// precision.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    fit_rate_with_log_power(points, 0.0)
}

/// Like [`fit_rate`], but first divides each value by `(ln T)^log_power`,
/// removing a known logarithmic factor so the fitted slope isolates the
/// power-law part.
pub fn fit_rate_deflated(points: &[(f64, f64)], log_power: f64) -> Result<RateFit> {
    fit_rate_with_log_power(points, log_power)
}

fn fit_rate_with_log_power(points: &[(f64, f64)], log_power: f64) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::insufficient(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(t, value) in points {
        if !(t > 1.0) {
            return Err(Error::config("horizon", format!("horizon {t} must exceed 1")));
        }
        if !(value > 0.0) {
            return Err(Error::config(
                "value",
                format!("log-log fit requires positive values, got {value} at horizon {t}"),
            ));
        }
        let deflated = value / t.ln().powf(log_power);
        logs.push((t.ln(), deflated.ln()));
    }
    let first = logs[0].0;
    if logs.iter().all(|&(x, _)| x == first) {
        return Err(Error::insufficient("rate fit needs at least two distinct horizons"));
    }
    let (slope, intercept) = least_squares_line(&logs);
    let mut ss = 0.0;
    for &(x, y) in &logs {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    let rms_residual = (ss / logs.len() as f64).sqrt();
    Ok(RateFit { slope, intercept, rms_residual })
}
