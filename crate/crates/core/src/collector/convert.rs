//! Browser trace events (the JSON trace-event format emitted by the
//! `Tracing` domain) to [`Trace`].

use std::collections::BTreeMap;

use serde_json::Value;

use super::CollectError;
use crate::trace_metrics::{PaintEvent, PaintKind, Request, Task, VisualSample};
use crate::Trace;

const TASK_NAMES: [&str; 3] = [
    "RunTask",
    "ThreadControllerImpl::RunTask",
    "TaskQueueManager::ProcessTaskFromWorkQueue",
];

struct Event<'a> {
    name: &'a str,
    ph: &'a str,
    ts: f64,
    dur: Option<f64>,
    pid: i64,
    tid: i64,
    args: &'a Value,
}

fn parse_event(v: &Value) -> Option<Event<'_>> {
    Some(Event {
        name: v.get("name")?.as_str()?,
        ph: v.get("ph").and_then(Value::as_str).unwrap_or(""),
        ts: v.get("ts")?.as_f64()?,
        dur: v.get("dur").and_then(Value::as_f64),
        pid: v.get("pid").and_then(Value::as_i64).unwrap_or(0),
        tid: v.get("tid").and_then(Value::as_i64).unwrap_or(0),
        args: v.get("args").unwrap_or(&Value::Null),
    })
}

fn data<'a>(e: &Event<'a>, key: &str) -> Option<&'a Value> {
    e.args.get("data").and_then(|d| d.get(key))
}

fn origin_of(url: &str) -> String {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.split(['/', '?', '#']).next().unwrap_or("").to_string()
}

#[derive(Default)]
struct PendingRequest {
    discovered: Option<f64>,
    start: Option<f64>,
    end: Option<f64>,
    bytes: u64,
    finished_bytes: Option<u64>,
    url: String,
}

/// Builds a normalized trace from raw trace events.
///
/// * Navigation start is the first main-frame `navigationStart` mark; its
///   process and thread identify the renderer main thread.
/// * Top-level `RunTask` slices on that thread become tasks.
/// * `ResourceWillSendRequest` / `ResourceSendRequest` / `ResourceFinish`
///   give request discovery, start and end.
/// * Visual progress is approximated from the main-frame paint timeline:
///   each paint advances completeness by an equal step, reaching 1.0 at the
///   last paint. Later meaningful-paint candidates get higher significance.
pub fn convert_trace_events(events: &[Value]) -> Result<Trace, CollectError> {
    let events: Vec<Event<'_>> = events.iter().filter_map(parse_event).collect();

    let nav = events
        .iter()
        .filter(|e| e.name == "navigationStart")
        .find(|e| data(e, "isLoadingMainFrame").and_then(Value::as_bool) != Some(false))
        .ok_or_else(|| CollectError::Conversion("trace has no navigationStart mark".into()))?;
    let (t0, pid, tid) = (nav.ts, nav.pid, nav.tid);
    let rel = |ts: f64| (ts - t0) / 1000.0;

    let mut paint_events = Vec::new();
    let mut candidates = 0u32;
    let mut paint_times = Vec::new();
    for e in events.iter().filter(|e| e.pid == pid && e.ts >= t0) {
        let kind = match e.name {
            "firstPaint" => PaintKind::FirstPaint,
            "firstContentfulPaint" => PaintKind::ContentfulPaint,
            "firstMeaningfulPaintCandidate" => PaintKind::FmpCandidate,
            "Paint" => {
                paint_times.push(rel(e.ts));
                continue;
            }
            _ => continue,
        };
        let significance = (kind == PaintKind::FmpCandidate).then(|| {
            candidates += 1;
            f64::from(candidates)
        });
        if kind != PaintKind::FirstPaint {
            paint_times.push(rel(e.ts));
        }
        paint_events.push(PaintEvent {
            t_ms: rel(e.ts),
            kind,
            significance,
        });
    }

    let mut slices: Vec<(f64, f64)> = events
        .iter()
        .filter(|e| e.pid == pid && e.tid == tid && e.ph == "X" && e.ts >= t0)
        .filter(|e| TASK_NAMES.contains(&e.name))
        .filter_map(|e| e.dur.filter(|&d| d > 0.0).map(|d| (rel(e.ts), d / 1000.0)))
        .collect();
    slices.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tasks: Vec<Task<f64>> = Vec::with_capacity(slices.len());
    for (start_ms, dur_ms) in slices {
        // nested slices are part of the enclosing task
        if tasks.last().is_some_and(|t| start_ms < t.end_ms()) {
            continue;
        }
        tasks.push(Task { start_ms, dur_ms });
    }

    let mut pending: BTreeMap<String, PendingRequest> = BTreeMap::new();
    for e in &events {
        let Some(id) = data(e, "requestId").and_then(Value::as_str) else {
            continue;
        };
        let entry = || PendingRequest::default();
        match e.name {
            "ResourceWillSendRequest" => {
                let r = pending.entry(id.to_string()).or_insert_with(entry);
                r.discovered.get_or_insert(e.ts);
            }
            "ResourceSendRequest" => {
                let r = pending.entry(id.to_string()).or_insert_with(entry);
                r.start.get_or_insert(e.ts);
                if let Some(url) = data(e, "url").and_then(Value::as_str) {
                    r.url = url.to_string();
                }
            }
            "ResourceReceivedData" => {
                let r = pending.entry(id.to_string()).or_insert_with(entry);
                r.bytes += data(e, "encodedDataLength").and_then(Value::as_u64).unwrap_or(0);
                r.end = Some(r.end.map_or(e.ts, |x: f64| x.max(e.ts)));
            }
            "ResourceFinish" => {
                let r = pending.entry(id.to_string()).or_insert_with(entry);
                r.end = Some(e.ts);
                r.finished_bytes = data(e, "encodedDataLength").and_then(Value::as_u64);
            }
            _ => {}
        }
    }
    let mut requests: Vec<Request<f64>> = pending
        .into_values()
        .filter_map(|r| {
            let start = r.start?;
            if start < t0 {
                return None;
            }
            let discovered = r.discovered.unwrap_or(start).clamp(t0, start);
            let end = r.end.unwrap_or(start).max(start);
            Some(Request {
                discovered_ms: rel(discovered),
                start_ms: rel(start),
                end_ms: rel(end),
                bytes: r.finished_bytes.unwrap_or(r.bytes),
                origin: origin_of(&r.url),
            })
        })
        .collect();
    requests.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));

    paint_times.sort_by(f64::total_cmp);
    paint_times.dedup();
    let n = paint_times.len();
    let visual_progress = paint_times
        .into_iter()
        .enumerate()
        .map(|(i, t_ms)| VisualSample {
            t_ms,
            fraction: if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 },
        })
        .collect();

    Trace {
        nav_start: 0.0,
        paint_events,
        tasks,
        requests,
        visual_progress,
    }
    .validated()
    .map_err(|e| CollectError::Conversion(e.to_string()))
}
