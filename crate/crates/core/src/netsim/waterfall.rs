use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{NetsimError, ThrottleProfile};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRequest<T> {
    pub id: u64,
    #[serde(default)]
    pub parent_id: Option<u64>,
    /// Delay after the parent completes (or after navigation start).
    pub discovery_offset_ms: T,
    pub bytes: u64,
    #[serde(default)]
    pub origin: String,
}

/// Request dependency structure replayed by [`simulate_waterfall`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WaterfallPlan<T> {
    pub requests: Vec<PlannedRequest<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRequest<T> {
    pub id: u64,
    pub start_ms: T,
    pub end_ms: T,
}

/// One transfer for the link engine.
///
/// The transfer is released at `base + (parent_end - parent_ref) + rtt`,
/// with `parent_end = 0` for roots.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Flow<T> {
    pub parent: Option<usize>,
    pub base: T,
    pub parent_ref: T,
    pub bits: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FlowTiming<T> {
    pub release: T,
    pub end: T,
}

/// Topological order of `flows`, or the index of a flow on a cycle.
fn topo_order<T>(flows: &[Flow<T>]) -> Result<Vec<usize>, usize> {
    let n = flows.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, f) in flows.iter().enumerate() {
        if let Some(p) = f.parent {
            indegree[i] += 1;
            children[p].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indegree[i] > 0).unwrap())
    }
}

/// Processor-sharing link: every transfer in flight receives an equal share
/// of `capacity_kbps` (bits per millisecond).
pub(crate) fn run_link<T: Scalar>(flows: &[Flow<T>], rtt_ms: T, capacity_kbps: T) -> Result<Vec<FlowTiming<T>>, usize> {
    topo_order(flows)?;
    let n = flows.len();
    let mut children = vec![Vec::new(); n];
    for (i, f) in flows.iter().enumerate() {
        if let Some(p) = f.parent {
            children[p].push(i);
        }
    }

    let release_after = |i: usize, parent_end: T| -> T {
        let f = &flows[i];
        let r = f.base + (parent_end - f.parent_ref) + rtt_ms;
        r.max(parent_end)
    };

    let mut timing: Vec<Option<FlowTiming<T>>> = vec![None; n];
    let mut release = vec![T::zero(); n];
    // (release time, index), kept sorted descending so the next one pops off the end
    let mut pending: Vec<(T, usize)> = Vec::new();
    let mut active: Vec<(usize, T)> = Vec::new();

    for i in 0..n {
        if flows[i].parent.is_none() {
            release[i] = release_after(i, T::zero());
            pending.push((release[i], i));
        }
    }

    let sort_pending = |p: &mut Vec<(T, usize)>| {
        p.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
    };
    sort_pending(&mut pending);

    let mut now = T::zero();
    let mut completed: Vec<usize> = Vec::new();

    loop {
        // completions release children
        while let Some(i) = completed.pop() {
            for &c in &children[i] {
                release[c] = release_after(c, timing[i].unwrap().end);
                pending.push((release[c], c));
            }
            sort_pending(&mut pending);
        }

        let next_release = pending.last().map(|p| p.0);
        if active.is_empty() {
            match next_release {
                None => break,
                Some(t) => now = now.max(t),
            }
        }

        let rate = capacity_kbps / T::lit(active.len().max(1) as f64);
        let min_rem = active.iter().map(|a| a.1).fold(T::infinity(), T::min);
        let finish_at = if active.is_empty() {
            T::infinity()
        } else {
            now + min_rem / rate
        };

        match next_release {
            Some(t) if t <= now || t < finish_at => {
                if t > now {
                    let served = rate * (t - now);
                    for a in active.iter_mut() {
                        a.1 = (a.1 - served).max(T::zero());
                    }
                    now = t;
                }
                while pending.last().is_some_and(|p| p.0 <= now) {
                    let (_, i) = pending.pop().unwrap();
                    if flows[i].bits <= T::zero() || capacity_kbps.is_infinite() {
                        timing[i] = Some(FlowTiming {
                            release: release[i],
                            end: release[i],
                        });
                        completed.push(i);
                    } else {
                        active.push((i, flows[i].bits));
                    }
                }
            }
            _ => {
                let served = rate * (finish_at - now);
                let tol = min_rem * T::lit(1e-12) + T::lit(1e-9);
                now = finish_at;
                let mut still = Vec::with_capacity(active.len());
                for (i, rem) in active.drain(..) {
                    if rem - min_rem <= tol {
                        timing[i] = Some(FlowTiming {
                            release: release[i],
                            end: now,
                        });
                        completed.push(i);
                    } else {
                        still.push((i, (rem - served).max(T::zero())));
                    }
                }
                active = still;
                // keep completion processing deterministic
                completed.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
    }

    Ok(timing.into_iter().map(|t| t.expect("acyclic plan completes")).collect())
}

/// Replays a request dependency plan over a shared downlink.
///
/// Each request starts `rtt_ms` after it is discovered, then shares the
/// downlink equally with every other transfer in flight. Output is sorted by
/// id.
pub fn simulate_waterfall<T: Scalar>(
    plan: &WaterfallPlan<T>,
    profile: &ThrottleProfile<T>,
) -> Result<Vec<SimulatedRequest<T>>, NetsimError> {
    profile.check()?;
    let mut index = HashMap::with_capacity(plan.requests.len());
    for (i, r) in plan.requests.iter().enumerate() {
        if index.insert(r.id, i).is_some() {
            return Err(NetsimError::DuplicateId(r.id));
        }
        if !r.discovery_offset_ms.is_finite() || r.discovery_offset_ms < T::zero() {
            return Err(NetsimError::InvalidPlan(format!(
                "request {}: discovery_offset_ms must be finite and >= 0",
                r.id
            )));
        }
    }
    let flows = plan
        .requests
        .iter()
        .map(|r| {
            let parent = match r.parent_id {
                None => None,
                Some(p) => Some(
                    *index
                        .get(&p)
                        .ok_or(NetsimError::UnknownParent { id: r.id, parent_id: p })?,
                ),
            };
            Ok(Flow {
                parent,
                base: r.discovery_offset_ms,
                parent_ref: T::zero(),
                bits: bits_of(r.bytes),
            })
        })
        .collect::<Result<Vec<_>, NetsimError>>()?;

    let timing = run_link(&flows, profile.rtt_ms, profile.downlink_kbps)
        .map_err(|i| NetsimError::CyclicPlan(plan.requests[i].id))?;

    let mut out: Vec<SimulatedRequest<T>> = plan
        .requests
        .iter()
        .zip(timing)
        .map(|(r, t)| SimulatedRequest {
            id: r.id,
            start_ms: t.release,
            end_ms: t.end,
        })
        .collect();
    out.sort_by_key(|r| r.id);
    Ok(out)
}

pub(crate) fn bits_of<T: Scalar>(bytes: u64) -> T {
    T::lit(bytes as f64 * 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(rtt: f64, kbps: f64) -> ThrottleProfile<f64> {
        ThrottleProfile {
            rtt_ms: rtt,
            downlink_kbps: kbps,
            uplink_kbps: kbps,
            cpu_multiplier: 1.0,
        }
    }

    fn req(id: u64, parent: Option<u64>, offset: f64, bytes: u64) -> PlannedRequest<f64> {
        PlannedRequest {
            id,
            parent_id: parent,
            discovery_offset_ms: offset,
            bytes,
            origin: String::new(),
        }
    }

    #[test]
    fn single_request() {
        // 500 kilobits
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 0.0, 62_500)],
        };
        let out = simulate_waterfall(&plan, &profile(100.0, 1000.0)).unwrap();
        assert_eq!(
            out,
            vec![SimulatedRequest {
                id: 1,
                start_ms: 100.0,
                end_ms: 600.0
            }]
        );
    }

    #[test]
    fn two_equal_requests_share_the_link() {
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 0.0, 25_000), req(2, None, 0.0, 25_000)],
        };
        // B = 200 kilobits each, C = 1000 kbps: both end at rtt + 2B/C = 50 + 400
        let out = simulate_waterfall(&plan, &profile(50.0, 1000.0)).unwrap();
        assert_eq!(out[0].end_ms, 450.0);
        assert_eq!(out[1].end_ms, 450.0);
    }

    #[test]
    fn child_follows_parent() {
        // parent: 500 kilobits ends at 600; child B/C = 200 ms
        let plan = WaterfallPlan {
            requests: vec![req(2, Some(1), 0.0, 25_000), req(1, None, 0.0, 62_500)],
        };
        let out = simulate_waterfall(&plan, &profile(100.0, 1000.0)).unwrap();
        assert_eq!(out[0].id, 1);
        assert_eq!((out[0].start_ms, out[0].end_ms), (100.0, 600.0));
        assert_eq!((out[1].start_ms, out[1].end_ms), (700.0, 900.0));
    }

    #[test]
    fn staggered_arrival() {
        // A alone for 100 ms (100 kbit served), then shares with B.
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 0.0, 37_500), req(2, None, 100.0, 12_500)],
        };
        let out = simulate_waterfall(&plan, &profile(0.0, 1000.0)).unwrap();
        // A: 300 kbit. After 100 ms, 200 left; B has 100; sharing 500 each:
        // B done at 300, A has 100 left -> done at 400.
        assert_eq!(out[1].end_ms, 300.0);
        assert_eq!(out[0].end_ms, 400.0);
    }

    #[test]
    fn zero_byte_request_completes_on_release() {
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 10.0, 0)],
        };
        let out = simulate_waterfall(&plan, &profile(20.0, 1000.0)).unwrap();
        assert_eq!((out[0].start_ms, out[0].end_ms), (30.0, 30.0));
    }

    #[test]
    fn cycle_detected() {
        let plan = WaterfallPlan {
            requests: vec![req(1, Some(2), 0.0, 10), req(2, Some(1), 0.0, 10)],
        };
        assert!(matches!(
            simulate_waterfall(&plan, &profile(0.0, 1000.0)),
            Err(NetsimError::CyclicPlan(_))
        ));
        let plan = WaterfallPlan {
            requests: vec![req(1, Some(1), 0.0, 10)],
        };
        assert!(matches!(
            simulate_waterfall(&plan, &profile(0.0, 1000.0)),
            Err(NetsimError::CyclicPlan(1))
        ));
    }

    #[test]
    fn unknown_parent_and_duplicates() {
        let plan = WaterfallPlan {
            requests: vec![req(1, Some(9), 0.0, 10)],
        };
        assert!(matches!(
            simulate_waterfall(&plan, &profile(0.0, 1000.0)),
            Err(NetsimError::UnknownParent { id: 1, parent_id: 9 })
        ));
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 0.0, 10), req(1, None, 0.0, 10)],
        };
        assert!(matches!(
            simulate_waterfall(&plan, &profile(0.0, 1000.0)),
            Err(NetsimError::DuplicateId(1))
        ));
    }

    #[test]
    fn unbounded_link_is_instant() {
        let plan = WaterfallPlan {
            requests: vec![req(1, None, 5.0, 1_000_000), req(2, Some(1), 7.0, 5)],
        };
        let out = simulate_waterfall(&plan, &ThrottleProfile::identity()).unwrap();
        assert_eq!((out[0].start_ms, out[0].end_ms), (5.0, 5.0));
        assert_eq!((out[1].start_ms, out[1].end_ms), (12.0, 12.0));
    }
}
