use super::waterfall::{bits_of, run_link, Flow};
use super::{NetsimError, ThrottleProfile};
use crate::scalar::Scalar;
use crate::trace_metrics::{NormalizedTrace, Request};

/// Parent of each request: the request that finished most recently at or
/// before it was discovered. Ties on end time go to the lower index, and a
/// request can only depend on one that ends strictly earlier in
/// `(end_ms, index)` order, so the result is acyclic.
pub(crate) fn infer_parents<T: Scalar>(requests: &[Request<T>]) -> Vec<Option<usize>> {
    requests
        .iter()
        .enumerate()
        .map(|(i, r)| {
            requests
                .iter()
                .enumerate()
                .filter(|&(j, p)| {
                    j != i && p.end_ms <= r.discovered_ms && (p.end_ms < r.end_ms || (p.end_ms == r.end_ms && j < i))
                })
                .fold(None::<(usize, T)>, |best, (j, p)| match best {
                    Some((_, e)) if e >= p.end_ms => best,
                    _ => Some((j, p.end_ms)),
                })
                .map(|(j, _)| j)
        })
        .collect()
}

/// Index of the request with the latest original end at or before `t`.
fn preceding_request<T: Scalar>(requests: &[Request<T>], t: T) -> Option<usize> {
    requests
        .iter()
        .enumerate()
        .filter(|(_, r)| r.end_ms <= t)
        .fold(None::<(usize, T)>, |best, (j, r)| match best {
            Some((_, e)) if e >= r.end_ms => best,
            _ => Some((j, r.end_ms)),
        })
        .map(|(j, _)| j)
}

/// Re-times a recorded trace under `profile`.
///
/// * Requests are replayed over a processor-sharing downlink. The recorded
///   `start..end` span is kept as server latency; each request then pays one
///   extra round trip and transfers its bytes over the shared link.
///   Dependencies are inferred from discovery times.
/// * Task durations are scaled by `cpu_multiplier`; each task moves later by
///   the extra time of the tasks before it, so order and gaps are preserved.
/// * Paint and visual-progress timestamps move by the end-time delay of the
///   latest request that had completed before them in the recording. Visual
///   samples are kept in time order.
pub fn apply_throttle<T: Scalar>(
    trace: &NormalizedTrace<T>,
    profile: &ThrottleProfile<T>,
) -> Result<NormalizedTrace<T>, NetsimError> {
    profile.check()?;
    let reqs = &trace.requests;
    let parents = infer_parents(reqs);
    let flows: Vec<Flow<T>> = reqs
        .iter()
        .zip(&parents)
        .map(|(r, &parent)| Flow {
            parent,
            base: r.end_ms,
            parent_ref: parent.map_or(T::zero(), |p| reqs[p].end_ms),
            bits: bits_of(r.bytes),
        })
        .collect();
    let timing =
        run_link(&flows, profile.rtt_ms, profile.downlink_kbps).map_err(|i| NetsimError::CyclicPlan(i as u64))?;

    let end_delay: Vec<T> = reqs.iter().zip(&timing).map(|(r, t)| t.end - r.end_ms).collect();

    let requests = reqs
        .iter()
        .zip(&parents)
        .zip(&timing)
        .map(|((r, &parent), t)| {
            let shift = parent.map_or(T::zero(), |p| end_delay[p]);
            Request {
                discovered_ms: r.discovered_ms + shift,
                start_ms: r.start_ms + shift + profile.rtt_ms,
                end_ms: t.end,
                bytes: r.bytes,
                origin: r.origin.clone(),
            }
        })
        .collect();

    let mut extra = T::zero();
    let slowdown = profile.cpu_multiplier - T::one();
    let tasks = trace
        .tasks
        .iter()
        .map(|task| {
            let moved = crate::trace_metrics::Task {
                start_ms: task.start_ms + extra,
                dur_ms: task.dur_ms * profile.cpu_multiplier,
            };
            extra += task.dur_ms * slowdown;
            moved
        })
        .collect();

    let delay_at = |t: T| preceding_request(reqs, t).map_or(T::zero(), |j| end_delay[j]);

    let paint_events = trace
        .paint_events
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.t_ms = p.t_ms + delay_at(p.t_ms);
            p
        })
        .collect();

    let mut last = T::zero();
    let visual_progress = trace
        .visual_progress
        .iter()
        .map(|v| {
            let mut v = v.clone();
            v.t_ms = (v.t_ms + delay_at(v.t_ms)).max(last);
            last = v.t_ms;
            v
        })
        .collect();

    Ok(NormalizedTrace {
        nav_start: trace.nav_start,
        paint_events,
        tasks,
        requests,
        visual_progress,
    })
}
