use std::fmt;
use std::ops::{Index, IndexMut};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScoreError;
use crate::scalar::Scalar;

/// The six scored metrics, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKey {
    Fcp,
    Fmp,
    Si,
    Tti,
    Fci,
    MaxFid,
}

impl MetricKey {
    pub const ALL: [MetricKey; 6] = [
        MetricKey::Fcp,
        MetricKey::Fmp,
        MetricKey::Si,
        MetricKey::Tti,
        MetricKey::Fci,
        MetricKey::MaxFid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKey::Fcp => "fcp",
            MetricKey::Fmp => "fmp",
            MetricKey::Si => "si",
            MetricKey::Tti => "tti",
            MetricKey::Fci => "fci",
            MetricKey::MaxFid => "max_fid",
        }
    }

    /// Audit identifier as printed in reports.
    pub fn audit_id(self) -> &'static str {
        match self {
            MetricKey::Fcp => "first-contentful-paint",
            MetricKey::Fmp => "first-meaningful-paint",
            MetricKey::Si => "speed-index",
            MetricKey::Tti => "interactive",
            MetricKey::Fci => "first-cpu-idle",
            MetricKey::MaxFid => "max-potential-fid",
        }
    }
}

impl fmt::Display for MetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerMetric<V> {
    pub fcp: V,
    pub fmp: V,
    pub si: V,
    pub tti: V,
    pub fci: V,
    pub max_fid: V,
}

impl<V> PerMetric<V> {
    pub fn from_fn(mut f: impl FnMut(MetricKey) -> V) -> Self {
        Self {
            fcp: f(MetricKey::Fcp),
            fmp: f(MetricKey::Fmp),
            si: f(MetricKey::Si),
            tti: f(MetricKey::Tti),
            fci: f(MetricKey::Fci),
            max_fid: f(MetricKey::MaxFid),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricKey, &V)> {
        MetricKey::ALL.into_iter().map(move |k| (k, &self[k]))
    }
}

impl<V> Index<MetricKey> for PerMetric<V> {
    type Output = V;
    fn index(&self, key: MetricKey) -> &V {
        match key {
            MetricKey::Fcp => &self.fcp,
            MetricKey::Fmp => &self.fmp,
            MetricKey::Si => &self.si,
            MetricKey::Tti => &self.tti,
            MetricKey::Fci => &self.fci,
            MetricKey::MaxFid => &self.max_fid,
        }
    }
}

impl<V> IndexMut<MetricKey> for PerMetric<V> {
    fn index_mut(&mut self, key: MetricKey) -> &mut V {
        match key {
            MetricKey::Fcp => &mut self.fcp,
            MetricKey::Fmp => &mut self.fmp,
            MetricKey::Si => &mut self.si,
            MetricKey::Tti => &mut self.tti,
            MetricKey::Fci => &mut self.fci,
            MetricKey::MaxFid => &mut self.max_fid,
        }
    }
}

/// Parts per million; weights are exact six-place decimals.
const WEIGHT_UNIT: u32 = 1_000_000;

/// Category weights, held as exact decimals so the sum-to-one check and the
/// single-metric products are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightTable {
    ppm: PerMetric<u32>,
}

impl Default for WeightTable {
    /// fcp 20.0 %, fmp 6.7 %, si 26.7 %, tti 33.3 %, fci 13.3 %, max-fid 0 %.
    fn default() -> Self {
        Self {
            ppm: PerMetric {
                fcp: 200_000,
                fmp: 67_000,
                si: 267_000,
                tti: 333_000,
                fci: 133_000,
                max_fid: 0,
            },
        }
    }
}

impl WeightTable {
    /// Builds a table from decimal weights with at most six decimal places.
    pub fn from_decimals(weights: PerMetric<f64>) -> Result<Self, ScoreError> {
        let mut ppm = PerMetric::<u32>::default();
        for (key, &w) in weights.iter() {
            if !w.is_finite() || w < 0.0 {
                return Err(ScoreError::InvalidWeights(format!("{key} weight must be >= 0")));
            }
            let scaled = w * f64::from(WEIGHT_UNIT);
            let units = scaled.round();
            if (scaled - units).abs() > 1e-3 {
                return Err(ScoreError::InvalidWeights(format!(
                    "{key} weight {w} has more than 6 decimal places"
                )));
            }
            ppm[key] = units as u32;
        }
        let total: u64 = ppm.iter().map(|(_, &u)| u64::from(u)).sum();
        if total != u64::from(WEIGHT_UNIT) {
            return Err(ScoreError::InvalidWeights(format!(
                "weights sum to {} instead of 1",
                total as f64 / f64::from(WEIGHT_UNIT)
            )));
        }
        Ok(Self { ppm })
    }

    pub fn weight(&self, key: MetricKey) -> f64 {
        f64::from(self.ppm[key]) / f64::from(WEIGHT_UNIT)
    }

    pub fn decimals(&self) -> PerMetric<f64> {
        PerMetric::from_fn(|k| self.weight(k))
    }

    pub fn sum(&self) -> f64 {
        MetricKey::ALL.iter().map(|&k| self.weight(k)).sum()
    }

    /// Weighted arithmetic mean of `scores`, evaluated in canonical metric
    /// order and confined to the range of the nonzero-weight scores.
    pub fn combine<T: Scalar>(&self, scores: &PerMetric<T>) -> T {
        let mut acc = T::zero();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for key in MetricKey::ALL {
            let units = self.ppm[key];
            if units == 0 {
                continue;
            }
            let s = scores[key];
            acc += T::lit(f64::from(units)) * s;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let mean = acc / T::lit(f64::from(WEIGHT_UNIT));
        mean.max(lo).min(hi)
    }
}

impl Serialize for WeightTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.decimals().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = PerMetric::<f64>::deserialize(deserializer)?;
        WeightTable::from_decimals(raw).map_err(D::Error::custom)
    }
}

/// Combines `(metric, score)` pairs given in any order.
pub fn aggregate<T: Scalar>(scores: &[(MetricKey, T)], weights: &WeightTable) -> Result<T, ScoreError> {
    let mut slots = PerMetric::<Option<T>>::default();
    for &(key, s) in scores {
        if slots[key].replace(s).is_some() {
            return Err(ScoreError::WeightMismatch(format!("duplicate score for {key}")));
        }
    }
    let mut full = PerMetric::<T>::default();
    for key in MetricKey::ALL {
        full[key] = slots[key].ok_or_else(|| ScoreError::WeightMismatch(format!("missing score for {key}")))?;
    }
    Ok(weights.combine(&full))
}
