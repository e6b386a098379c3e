//! Empirical quantiles and the quantile-discrepancy kernel.
//!
//! The quantile convention is the inf definition: the theta-quantile of a
//! sample of size m is the order statistic at position ceil(m * theta)
//! (1-based). No interpolation; interpolating conventions would silently
//! change the fitting objective.

use crate::error::{Error, Result};

/// Percentage level and location for one discrepancy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyParams {
    /// Quantile level in (0, 1).
    pub theta: f64,
    /// Location, normally a sample or population quantile.
    pub xi: f64,
}

impl DiscrepancyParams {
    pub fn new(theta: f64, xi: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be in (0,1), got {theta}"
            )));
        }
        if !xi.is_finite() {
            return Err(Error::InvalidParameter("xi must be finite".into()));
        }
        Ok(DiscrepancyParams { theta, xi })
    }
}

/// Theta-quantile of a sorted sample: order statistic ceil(m * theta),
/// 1-based. Left-continuous: theta exactly at i/m yields the i-th order
/// statistic.
pub fn empirical_quantile(sorted_sample: &[f64], theta: f64) -> Result<f64> {
    if sorted_sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be in (0,1), got {theta}"
        )));
    }
    let m = sorted_sample.len();
    let rank = (m as f64 * theta).ceil() as usize;
    let rank = rank.clamp(1, m);
    Ok(sorted_sample[rank - 1])
}

/// Quantile discrepancy of a scalar from a location: weight theta above,
/// 1 - theta at or below. Zero exactly at z = xi, so the indicator
/// convention at equality does not matter.
#[inline]
pub fn phi(z: f64, params: DiscrepancyParams) -> f64 {
    let d = z - params.xi;
    if d > 0.0 {
        params.theta * d
    } else {
        (1.0 - params.theta) * (-d)
    }
}

/// Asymmetrically weighted absolute deviation of a sample around xi;
/// minimised over xi at the empirical theta-quantile.
pub fn variability(sample: &[f64], theta: f64, xi: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let params = DiscrepancyParams::new(theta, xi)?;
    Ok(sample.iter().map(|&x| phi(x, params)).sum())
}

/// Sort a sample ascending; NaN is rejected upstream so total order holds.
pub fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    s
}
