use std::io::{BufRead, Write};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flag_outliers, CorpusError, SiteRecord};
use crate::collector::{capture_raw, BrowserEndpoint, CaptureRequest, CollectError, DeviceKind, ReplayDir};
use crate::config::Calibration;
use crate::netsim::{apply_throttle, NetsimError};
use crate::scoring::{score_metrics, ScoreError};
use crate::trace_metrics::{compute_all_with, MetricError};
use crate::{Metrics, Profile, Report, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Ok,
    Failed(String),
}

/// Outcome of auditing one site in one device mode.
///
/// `metrics` and `report` are present exactly when the status is `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub site: SiteRecord,
    pub mode: DeviceKind,
    pub metrics: Option<Metrics>,
    pub report: Option<Report>,
    pub test_date: NaiveDate,
    pub status: AuditStatus,
    pub outlier_flag: bool,
}

impl AuditResult {
    pub fn ok(site: SiteRecord, mode: DeviceKind, metrics: Metrics, report: Report, test_date: NaiveDate) -> Self {
        Self {
            site,
            mode,
            metrics: Some(metrics),
            report: Some(report),
            test_date,
            status: AuditStatus::Ok,
            outlier_flag: false,
        }
    }

    pub fn failed(site: SiteRecord, mode: DeviceKind, reason: impl Into<String>, test_date: NaiveDate) -> Self {
        Self {
            site,
            mode,
            metrics: None,
            report: None,
            test_date,
            status: AuditStatus::Failed(reason.into()),
            outlier_flag: false,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == AuditStatus::Ok
    }

    pub fn performance_score(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.performance_score)
    }

    pub fn failure_reason(&self) -> Option<&str> {
        match &self.status {
            AuditStatus::Failed(r) => Some(r),
            AuditStatus::Ok => None,
        }
    }

    fn check(&self) -> Result<(), String> {
        let full = self.metrics.is_some() && self.report.is_some();
        let empty = self.metrics.is_none() && self.report.is_none();
        match (&self.status, full, empty) {
            (AuditStatus::Ok, true, _) | (AuditStatus::Failed(_), _, true) => Ok(()),
            _ => Err("metrics and report must be present exactly when status is ok".into()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error("throttling failed: {0}")]
    Throttle(#[from] NetsimError),
    #[error("metric extraction failed: {0}")]
    Metric(#[from] MetricError),
    #[error("scoring failed: {0}")]
    Score(#[from] ScoreError),
}

/// Throttles a recorded trace for `mode` and scores it.
///
/// The mode's CPU multiplier replaces the one in `throttle`.
pub fn audit_trace(
    raw: &Trace,
    mode: DeviceKind,
    throttle: &Profile,
    cal: &Calibration,
) -> Result<(Metrics, Report), AuditError> {
    let profile = throttle.with_cpu_multiplier(cal.modes.get(mode).cpu_multiplier);
    let trace = apply_throttle(raw, &profile)?;
    let metrics = compute_all_with(&trace, &cal.quiet_window)?;
    let report = score_metrics(&metrics, cal.curves.get(mode), &cal.weights, &cal.categories)?;
    Ok((metrics, report))
}

/// Where a batch gets its unthrottled traces from.
pub trait TraceSource: Sync {
    fn fetch(&self, site: &SiteRecord, mode: DeviceKind) -> Result<Trace, CollectError>;
}

impl TraceSource for ReplayDir {
    fn fetch(&self, site: &SiteRecord, mode: DeviceKind) -> Result<Trace, CollectError> {
        self.load(site.no, mode)
    }
}

/// Captures each site through a browser endpoint.
#[derive(Debug, Clone)]
pub struct LiveSource {
    pub endpoint: BrowserEndpoint,
    pub calibration: Calibration,
}

impl TraceSource for LiveSource {
    fn fetch(&self, site: &SiteRecord, mode: DeviceKind) -> Result<Trace, CollectError> {
        let req = CaptureRequest {
            url: site.url.clone(),
            mode: *self.calibration.modes.get(mode),
            throttle: Profile::identity(),
            timeout_ms: self.calibration.navigation_timeout_ms,
        };
        capture_raw(&req, &self.endpoint, crate::collector::DEFAULT_SETTLE_MS)
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions<'a> {
    pub calibration: &'a Calibration,
    pub throttle: Profile,
    pub parallelism: NonZeroUsize,
    pub test_date: NaiveDate,
}

/// Reported once per finished audit, from whichever worker finished it.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub done: usize,
    pub total: usize,
    pub result: &'a AuditResult,
}

/// Audits every record in every mode.
///
/// Failures become `failed` results. The output is sorted by
/// `(no, mode)` and does not depend on the degree of parallelism.
pub fn run_batch(
    records: &[SiteRecord],
    modes: &[DeviceKind],
    source: &dyn TraceSource,
    opts: &BatchOptions<'_>,
    progress: &(dyn Fn(Progress<'_>) + Sync),
) -> Vec<AuditResult> {
    let jobs: Vec<(&SiteRecord, DeviceKind)> = records
        .iter()
        .flat_map(|r| modes.iter().map(move |&m| (r, m)))
        .collect();
    let total = jobs.len();
    let done = AtomicUsize::new(0);

    let run_one = |&(site, mode): &(&SiteRecord, DeviceKind)| {
        let result = audit_one(site, mode, source, opts);
        let n = done.fetch_add(1, Ordering::SeqCst) + 1;
        progress(Progress {
            done: n,
            total,
            result: &result,
        });
        result
    };

    let mut results: Vec<AuditResult> = match rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism.get())
        .build()
    {
        Ok(pool) => pool.install(|| jobs.par_iter().map(run_one).collect()),
        Err(_) => jobs.iter().map(run_one).collect(),
    };
    results.sort_by_key(|r| (r.site.no, r.mode));
    results
}

fn audit_one(site: &SiteRecord, mode: DeviceKind, source: &dyn TraceSource, opts: &BatchOptions<'_>) -> AuditResult {
    let outcome = source
        .fetch(site, mode)
        .map_err(AuditError::from)
        .and_then(|raw| audit_trace(&raw, mode, &opts.throttle, opts.calibration));
    match outcome {
        Ok((metrics, report)) => {
            let mut r = AuditResult::ok(site.clone(), mode, metrics, report, opts.test_date);
            r.outlier_flag = flag_outliers(&r, &opts.calibration.outliers);
            r
        }
        Err(e) => AuditResult::failed(site.clone(), mode, e.to_string(), opts.test_date),
    }
}

/// Writes one JSON object per line.
pub fn write_results<W: Write>(mut out: W, results: &[AuditResult]) -> std::io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn results_to_string(results: &[AuditResult]) -> String {
    let mut buf = Vec::new();
    write_results(&mut buf, results).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Reads a JSON-lines results file. Blank lines are ignored.
pub fn read_results<R: BufRead>(input: R) -> Result<Vec<AuditResult>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| CorpusError::Results {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r: AuditResult = serde_json::from_str(&line).map_err(|e| CorpusError::Results {
            line: line_no,
            message: e.to_string(),
        })?;
        r.check()
            .map_err(|message| CorpusError::Results { line: line_no, message })?;
        out.push(r);
    }
    Ok(out)
}
