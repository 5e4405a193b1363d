//! Metric values to 0–100 scores, and scores to a weighted performance score.

mod curve;
mod weights;

use serde::{Deserialize, Serialize};

pub use curve::{metric_score, ScoreCurve};
pub use weights::{aggregate, MetricKey, PerMetric, WeightTable};

use crate::scalar::{round_half_away, Scalar};
use crate::trace_metrics::MetricSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("invalid score curve: podr {podr_ms} ms must be > 0 and below median {median_ms} ms")]
    InvalidCurve { median_ms: f64, podr_ms: f64 },
    #[error("metric value {0} is not a nonnegative finite number")]
    InvalidValue(f64),
    #[error("weight mismatch: {0}")]
    WeightMismatch(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Good,
    Average,
    Poor,
}

/// Lower bounds (inclusive) of the `good` and `average` bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryBands {
    pub good: f64,
    pub average: f64,
}

impl Default for CategoryBands {
    fn default() -> Self {
        Self {
            good: 90.0,
            average: 50.0,
        }
    }
}

pub fn categorize(score: f64, bands: &CategoryBands) -> Category {
    if score >= bands.good {
        Category::Good
    } else if score >= bands.average {
        Category::Average
    } else {
        Category::Poor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport<T> {
    pub scores: PerMetric<T>,
    /// Unrounded weighted score; averages are taken over this value.
    pub performance_score: T,
    /// The single-audit display value, rounded to an integer.
    pub display_score: i64,
    pub category: Category,
}

/// Scores a metric set with one curve per metric.
pub fn score_metrics<T: Scalar>(
    metrics: &MetricSet<T>,
    curves: &PerMetric<ScoreCurve<T>>,
    weights: &WeightTable,
    bands: &CategoryBands,
) -> Result<ScoreReport<T>, ScoreError> {
    let values = PerMetric {
        fcp: metrics.fcp_ms,
        fmp: metrics.fmp_ms,
        si: metrics.speed_index_ms,
        tti: metrics.tti_ms,
        fci: metrics.fci_ms,
        max_fid: metrics.max_fid_ms,
    };
    let mut scores = PerMetric::<T>::default();
    for key in MetricKey::ALL {
        scores[key] = metric_score(values[key], &curves[key])?;
    }
    let performance_score = weights.combine(&scores);
    let raw = performance_score.as_f64();
    Ok(ScoreReport {
        scores,
        performance_score,
        display_score: round_half_away(raw, 0) as i64,
        category: categorize(raw, bands),
    })
}
