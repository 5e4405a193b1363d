use serde::{Deserialize, Serialize};

use super::trace::{NormalizedTrace, PaintKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("page never painted content")]
    NoContentfulPaint,
    #[error("visual progress never reaches 1.0")]
    IncompleteVisualProgress,
}

/// The six page-load metrics of one audit, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet<T> {
    pub fcp_ms: T,
    pub fmp_ms: T,
    pub speed_index_ms: T,
    pub tti_ms: T,
    pub fci_ms: T,
    pub max_fid_ms: T,
}

/// Parameters of the main-thread / network quiet-window search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuietWindow<T> {
    /// Tasks strictly longer than this are long tasks.
    pub long_task_ms: T,
    pub window_ms: T,
    /// Maximum number of requests allowed in flight during the window.
    pub max_inflight: usize,
}

impl<T: Scalar> Default for QuietWindow<T> {
    fn default() -> Self {
        Self {
            long_task_ms: T::lit(50.0),
            window_ms: T::lit(5000.0),
            max_inflight: 2,
        }
    }
}

pub fn compute_fcp<T: Scalar>(trace: &NormalizedTrace<T>) -> Result<T, MetricError> {
    trace
        .paint_events
        .iter()
        .filter(|p| p.kind == PaintKind::ContentfulPaint)
        .map(|p| p.t_ms)
        .reduce(T::min)
        .ok_or(MetricError::NoContentfulPaint)
}

/// Time of the most significant layout candidate, earliest on ties, never
/// before FCP. Falls back to FCP when the trace has no candidates.
pub fn compute_fmp<T: Scalar>(trace: &NormalizedTrace<T>) -> Result<T, MetricError> {
    let fcp = compute_fcp(trace)?;
    let best = trace
        .paint_events
        .iter()
        .filter(|p| p.kind == PaintKind::FmpCandidate)
        .map(|p| (p.significance.unwrap_or_else(T::zero), p.t_ms))
        .reduce(|best, cand| {
            if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                cand
            } else {
                best
            }
        });
    Ok(best.map_or(fcp, |(_, t)| t.max(fcp)))
}

/// Integral of visual incompleteness up to the first instant the page is
/// fully painted.
pub fn compute_speed_index<T: Scalar>(trace: &NormalizedTrace<T>) -> Result<T, MetricError> {
    let mut area = T::zero();
    let mut prev_t = T::zero();
    let mut prev_fraction = T::zero();
    for sample in &trace.visual_progress {
        area += (sample.t_ms - prev_t) * (T::one() - prev_fraction);
        if sample.fraction >= T::one() {
            return Ok(area);
        }
        prev_t = sample.t_ms;
        prev_fraction = prev_fraction.max(sample.fraction);
    }
    Err(MetricError::IncompleteVisualProgress)
}

/// Half-open intervals during which more than `max_inflight` requests are in
/// flight.
fn network_busy<T: Scalar>(trace: &NormalizedTrace<T>, max_inflight: usize) -> Vec<(T, T)> {
    let mut edges: Vec<(T, i32)> = Vec::with_capacity(trace.requests.len() * 2);
    for r in trace.requests.iter().filter(|r| r.end_ms > r.start_ms) {
        edges.push((r.start_ms, 1));
        edges.push((r.end_ms, -1));
    }
    // ends sort before starts at the same instant
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut busy = Vec::new();
    let mut inflight = 0usize;
    let mut opened: Option<T> = None;
    for (t, delta) in edges {
        if delta > 0 {
            inflight += 1;
        } else {
            inflight -= 1;
        }
        match opened {
            None if inflight > max_inflight => opened = Some(t),
            Some(s) if inflight <= max_inflight => {
                if t > s {
                    busy.push((s, t));
                }
                opened = None;
            }
            _ => {}
        }
    }
    busy
}

fn long_tasks<T: Scalar>(trace: &NormalizedTrace<T>, threshold: T) -> Vec<(T, T)> {
    trace
        .tasks
        .iter()
        .filter(|t| t.dur_ms > threshold)
        .map(|t| (t.start_ms, t.end_ms()))
        .collect()
}

/// Earliest `w >= fcp` such that `[w, w + window)` touches no blocked
/// interval. Blocked intervals are half-open; the trace is quiet after its
/// last event, so a window always exists.
fn earliest_quiet_start<T: Scalar>(fcp: T, window: T, blocked: &[(T, T)]) -> T {
    let mut candidates: Vec<T> = std::iter::once(fcp)
        .chain(blocked.iter().map(|b| b.1).filter(|&e| e >= fcp))
        .collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates
        .into_iter()
        .find(|&w| !blocked.iter().any(|&(s, e)| s < w + window && e > w))
        .expect("a window after the last blocked interval is always quiet")
}

fn interactive_at<T: Scalar>(fcp: T, window_start: T, long: &[(T, T)]) -> T {
    long.iter()
        .map(|t| t.1)
        .filter(|&e| e <= window_start)
        .fold(fcp, T::max)
}

pub fn compute_tti<T: Scalar>(trace: &NormalizedTrace<T>, fcp: T) -> T {
    compute_tti_with(trace, fcp, &QuietWindow::default())
}

pub fn compute_tti_with<T: Scalar>(trace: &NormalizedTrace<T>, fcp: T, cfg: &QuietWindow<T>) -> T {
    let long = long_tasks(trace, cfg.long_task_ms);
    let mut blocked = long.clone();
    blocked.extend(network_busy(trace, cfg.max_inflight));
    let w = earliest_quiet_start(fcp, cfg.window_ms, &blocked);
    interactive_at(fcp, w, &long)
}

pub fn compute_fci<T: Scalar>(trace: &NormalizedTrace<T>, fcp: T) -> T {
    compute_fci_with(trace, fcp, &QuietWindow::default())
}

/// Like [`compute_tti_with`] without the network condition.
pub fn compute_fci_with<T: Scalar>(trace: &NormalizedTrace<T>, fcp: T, cfg: &QuietWindow<T>) -> T {
    let long = long_tasks(trace, cfg.long_task_ms);
    let w = earliest_quiet_start(fcp, cfg.window_ms, &long);
    interactive_at(fcp, w, &long)
}

/// Longest task whose `[start, end)` interval intersects `[fcp, tti]`.
pub fn compute_max_fid<T: Scalar>(trace: &NormalizedTrace<T>, fcp: T, tti: T) -> T {
    trace
        .tasks
        .iter()
        .filter(|t| t.start_ms <= tti && t.end_ms() > fcp)
        .map(|t| t.dur_ms)
        .fold(T::zero(), T::max)
}

pub fn compute_all<T: Scalar>(trace: &NormalizedTrace<T>) -> Result<MetricSet<T>, MetricError> {
    compute_all_with(trace, &QuietWindow::default())
}

pub fn compute_all_with<T: Scalar>(
    trace: &NormalizedTrace<T>,
    cfg: &QuietWindow<T>,
) -> Result<MetricSet<T>, MetricError> {
    let fcp_ms = compute_fcp(trace)?;
    let fmp_ms = compute_fmp(trace)?;
    let speed_index_ms = compute_speed_index(trace)?;
    let tti_ms = compute_tti_with(trace, fcp_ms, cfg);
    let fci_ms = compute_fci_with(trace, fcp_ms, cfg);
    let max_fid_ms = compute_max_fid(trace, fcp_ms, tti_ms);
    Ok(MetricSet {
        fcp_ms,
        fmp_ms,
        speed_index_ms,
        tti_ms,
        fci_ms,
        max_fid_ms,
    })
}
