use serde::{Deserialize, Serialize};

use super::ScoreError;
use crate::scalar::{std_normal_sf, Scalar, PROBIT_0_9};

/// Log-normal calibration of one metric: `median_ms` scores 50 and
/// `podr_ms` (point of diminishing returns) scores 90.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCurve<T> {
    pub median_ms: T,
    pub podr_ms: T,
}

impl<T: Scalar> ScoreCurve<T> {
    pub fn new(median_ms: T, podr_ms: T) -> Result<Self, ScoreError> {
        let curve = Self { median_ms, podr_ms };
        curve.check()?;
        Ok(curve)
    }

    pub fn check(&self) -> Result<(), ScoreError> {
        let ok = self.podr_ms.is_finite()
            && self.median_ms.is_finite()
            && self.podr_ms > T::zero()
            && self.podr_ms < self.median_ms;
        if ok {
            Ok(())
        } else {
            Err(ScoreError::InvalidCurve {
                median_ms: self.median_ms.as_f64(),
                podr_ms: self.podr_ms.as_f64(),
            })
        }
    }

    /// Location and scale of the underlying log-normal distribution.
    pub fn log_params(&self) -> (T, T) {
        let mu = self.median_ms.ln();
        let sigma = (mu - self.podr_ms.ln()) / T::lit(PROBIT_0_9);
        (mu, sigma)
    }
}

/// Maps a metric value to a 0–100 score, `100 · (1 − Φ((ln v − μ) / σ))`.
pub fn metric_score<T: Scalar>(value: T, curve: &ScoreCurve<T>) -> Result<T, ScoreError> {
    curve.check()?;
    if !value.is_finite() || value < T::zero() {
        return Err(ScoreError::InvalidValue(value.as_f64()));
    }
    if value == T::zero() {
        return Ok(T::lit(100.0));
    }
    let (mu, sigma) = curve.log_params();
    let z = (value.ln() - mu) / sigma;
    Ok(T::lit(100.0) * std_normal_sf(z))
}
