use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::collector::DeviceKind;
use crate::corpus::{normalize_region, AuditResult, MemberRegions};
use crate::scalar::round_half_away;

/// Per-region averages over the ok audits of each mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAggregate {
    pub region: String,
    /// Two-decimal mean; absent when the mode has no ok audit.
    pub mean_mobile: Option<f64>,
    pub mean_web: Option<f64>,
    pub n_ok_mobile: u32,
    pub n_ok_web: u32,
    pub n_failed: u32,
    /// Latest test date among the region's audits.
    pub test_date: Option<NaiveDate>,
    /// Unrounded means, kept for chart data.
    pub raw_mean_mobile: Option<f64>,
    pub raw_mean_web: Option<f64>,
}

impl RegionAggregate {
    /// A row built from already-rounded means, as printed in a table.
    pub fn from_means(region: &str, mobile: f64, web: f64, test_date: Option<NaiveDate>) -> Self {
        Self {
            region: region.to_string(),
            mean_mobile: Some(mobile),
            mean_web: Some(web),
            n_ok_mobile: 1,
            n_ok_web: 1,
            n_failed: 0,
            test_date,
            raw_mean_mobile: Some(mobile),
            raw_mean_web: Some(web),
        }
    }

    pub fn mean(&self, mode: DeviceKind) -> Option<f64> {
        match mode {
            DeviceKind::Mobile => self.mean_mobile,
            DeviceKind::Desktop => self.mean_web,
        }
    }
}

#[derive(Default)]
struct Acc {
    display: String,
    sum: [f64; 2],
    n: [u32; 2],
    failed: u32,
    date: Option<NaiveDate>,
}

fn slot(mode: DeviceKind) -> usize {
    match mode {
        DeviceKind::Mobile => 0,
        DeviceKind::Desktop => 1,
    }
}

/// Groups results by region and averages the unrounded scores per mode.
///
/// Member regions come first in list order; other regions follow
/// alphabetically. Failed audits only count towards `n_failed`.
pub fn aggregate_regions(results: &[AuditResult], members: &MemberRegions) -> Vec<RegionAggregate> {
    let mut groups: HashMap<String, Acc> = HashMap::new();
    for r in results {
        let key = normalize_region(&r.site.region);
        let acc = groups.entry(key).or_insert_with(|| Acc {
            display: members
                .canonical(&r.site.region)
                .map(str::to_string)
                .unwrap_or_else(|| r.site.region.split_whitespace().collect::<Vec<_>>().join(" ")),
            ..Acc::default()
        });
        acc.date = acc.date.max(Some(r.test_date));
        match r.performance_score() {
            Some(score) => {
                acc.sum[slot(r.mode)] += score;
                acc.n[slot(r.mode)] += 1;
            }
            None => acc.failed += 1,
        }
    }

    let mut rows: Vec<(Option<usize>, Acc)> = groups
        .into_values()
        .map(|acc| (members.position(&acc.display), acc))
        .collect();
    rows.sort_by(|(pa, a), (pb, b)| match (pa, pb) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.display.cmp(&b.display),
    });

    rows.into_iter()
        .map(|(_, acc)| {
            let raw = |i: usize| (acc.n[i] > 0).then(|| acc.sum[i] / f64::from(acc.n[i]));
            let (raw_m, raw_w) = (raw(0), raw(1));
            RegionAggregate {
                region: acc.display,
                mean_mobile: raw_m.map(|m| round_half_away(m, 2)),
                mean_web: raw_w.map(|m| round_half_away(m, 2)),
                n_ok_mobile: acc.n[0],
                n_ok_web: acc.n[1],
                n_failed: acc.failed,
                test_date: acc.date,
                raw_mean_mobile: raw_m,
                raw_mean_web: raw_w,
            }
        })
        .collect()
}

/// The bottom "total" row: each region counts once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallAverage {
    /// One-decimal mean of the two-decimal region means.
    pub mobile: Option<f64>,
    pub web: Option<f64>,
    pub test_date: Option<NaiveDate>,
}

pub fn overall_average(aggregates: &[RegionAggregate]) -> OverallAverage {
    let mean_of = |pick: fn(&RegionAggregate) -> Option<f64>| {
        // summing sorted values keeps the result independent of row order
        let mut vals: Vec<f64> = aggregates.iter().filter_map(pick).collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(f64::total_cmp);
        let n = vals.len() as f64;
        Some(round_half_away(vals.iter().sum::<f64>() / n, 1))
    };
    OverallAverage {
        mobile: mean_of(|a| a.mean_mobile),
        web: mean_of(|a| a.mean_web),
        test_date: aggregates.iter().filter_map(|a| a.test_date).max(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Mobile,
    Web,
    /// Mean of the mobile and web means (either alone when the other is absent).
    Combined,
}

impl std::str::FromStr for RankMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mobile" => Ok(RankMode::Mobile),
            "web" | "desktop" => Ok(RankMode::Web),
            "combined" | "combined-mean" => Ok(RankMode::Combined),
            other => Err(format!("unknown rank mode `{other}`")),
        }
    }
}

impl RankMode {
    pub fn key(self, a: &RegionAggregate) -> Option<f64> {
        match self {
            RankMode::Mobile => a.mean_mobile,
            RankMode::Web => a.mean_web,
            RankMode::Combined => match (a.mean_mobile, a.mean_web) {
                (Some(m), Some(w)) => Some((m + w) / 2.0),
                (m, w) => m.or(w),
            },
        }
    }
}

/// Highest mean first; ties go alphabetically by region, regions without a
/// mean go last.
pub fn rank_regions(aggregates: &[RegionAggregate], mode: RankMode) -> Vec<RegionAggregate> {
    let mut out = aggregates.to_vec();
    out.sort_by(|a, b| {
        let by_value = match (mode.key(a), mode.key(b)) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_value.then_with(|| a.region.cmp(&b.region))
    });
    out
}
