//! Independent reference implementations and random-input generators shared
//! by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use std::num::NonZeroUsize;

use chrono::NaiveDate;
use perfaudit::collector::{DeviceKind, ReplayDir};
use perfaudit::config::Calibration;
use perfaudit::corpus::{ingest_corpus, membership_filter, run_batch, AuditResult, BatchOptions, MemberRegions};
use perfaudit::netsim::{PlannedRequest, WaterfallPlan};
use perfaudit::trace_metrics::{PaintEvent, PaintKind, Request, Task, VisualSample};
use perfaudit::{Plan, Profile, Trace};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn audit_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 8, 25).unwrap()
}

/// Audits the member sites of a fixture corpus from the stored traces, in
/// both modes under the 4g profile.
pub fn fixture_batch(corpus: &str, parallelism: usize) -> Vec<AuditResult> {
    let members = MemberRegions::default();
    let records = ingest_corpus(&fixtures().join(corpus), &members).unwrap();
    let records = membership_filter(&records, &members);
    let cal = Calibration::default();
    let opts = BatchOptions {
        calibration: &cal,
        throttle: cal.resolve_profile("4g").unwrap(),
        parallelism: NonZeroUsize::new(parallelism).unwrap(),
        test_date: audit_date(),
    };
    let source = ReplayDir::new(fixtures().join("traces"));
    run_batch(
        &records,
        &[DeviceKind::Mobile, DeviceKind::Desktop],
        &source,
        &opts,
        &|_| {},
    )
}

/// A runner with a fixed seed, for checks that must be reproducible.
pub fn seeded_runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

// ---------------------------------------------------------------- normal CDF

/// `erf` from its everywhere-convergent series
/// `2/sqrt(pi) * exp(-z^2) * sum_n 2^n z^(2n+1) / (1*3*...*(2n+1))`.
/// All terms are positive, so there is no cancellation.
pub fn erf_series(z: f64) -> f64 {
    let sign = z.signum();
    let z = z.abs();
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > sum * 1e-18 {
        n += 1.0;
        term *= 2.0 * z * z / (2.0 * n + 1.0);
        sum += term;
    }
    sign * 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum
}

pub fn phi_oracle(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Reference log-normal score: `100 * (1 - Phi((ln v - mu) / sigma))` with
/// the curve pinned by `score(median) = 50`, `score(podr) = 90`.
pub fn score_oracle(value: f64, median: f64, podr: f64) -> f64 {
    if value == 0.0 {
        return 100.0;
    }
    let z90 = 1.281_551_565_544_600_5;
    let mu = median.ln();
    let sigma = (mu - podr.ln()) / z90;
    100.0 * (1.0 - phi_oracle((value.ln() - mu) / sigma))
}

// ---------------------------------------------------------- metric oracles

/// Cells `[c, c + 1)` blocked by a long task or by more than `max_inflight`
/// open requests. Integer-time traces only.
fn blocked_cells(trace: &Trace, horizon: usize, with_network: bool) -> Vec<bool> {
    let mut blocked = vec![false; horizon];
    for t in trace.tasks.iter().filter(|t| t.dur_ms > 50.0) {
        blocked[t.start_ms as usize..(t.start_ms + t.dur_ms) as usize].fill(true);
    }
    if with_network {
        for (c, cell) in blocked.iter_mut().enumerate() {
            let t = c as f64;
            let open = trace
                .requests
                .iter()
                .filter(|r| r.start_ms <= t && t < r.end_ms)
                .count();
            if open > 2 {
                *cell = true;
            }
        }
    }
    blocked
}

/// Scans window starts one millisecond at a time.
fn window_scan(trace: &Trace, fcp: f64, with_network: bool) -> f64 {
    const WINDOW: usize = 5000;
    let horizon = trace.end_ms() as usize + 2 * WINDOW + 2;
    let blocked = blocked_cells(trace, horizon, with_network);
    let mut w = fcp as usize;
    while blocked[w..w + WINDOW].iter().any(|&b| b) {
        w += 1;
    }
    trace
        .tasks
        .iter()
        .filter(|t| t.dur_ms > 50.0)
        .map(|t| t.start_ms + t.dur_ms)
        .filter(|&e| e <= w as f64)
        .fold(fcp, f64::max)
}

pub fn tti_oracle(trace: &Trace, fcp: f64) -> f64 {
    window_scan(trace, fcp, true)
}

pub fn fci_oracle(trace: &Trace, fcp: f64) -> f64 {
    window_scan(trace, fcp, false)
}

/// Midpoint Riemann sum of visual incompleteness in 1 ms steps.
pub fn speed_index_oracle(trace: &Trace) -> f64 {
    let done_at = trace
        .visual_progress
        .iter()
        .find(|v| v.fraction >= 1.0)
        .expect("complete visual progress")
        .t_ms;
    let vc = |t: f64| {
        trace
            .visual_progress
            .iter()
            .filter(|v| v.t_ms <= t)
            .map(|v| v.fraction)
            .fold(0.0, f64::max)
    };
    let steps = done_at.ceil() as usize;
    (0..steps).map(|i| 1.0 - vc(i as f64 + 0.5)).sum()
}

/// Longest task that is running at some whole millisecond of `[fcp, tti]`.
pub fn max_fid_oracle(trace: &Trace, fcp: f64, tti: f64) -> f64 {
    let mut best = 0.0;
    for t in trace.tasks.iter() {
        let runs_in_window = (fcp as i64..=tti as i64).any(|ms| {
            let ms = ms as f64;
            t.start_ms <= ms && ms < t.start_ms + t.dur_ms
        });
        if runs_in_window && t.dur_ms > best {
            best = t.dur_ms;
        }
    }
    best
}

// ----------------------------------------------------------- netsim oracle

/// Result of the step simulation: `(start, end)` per request in plan order,
/// and the most bits the link delivered within any single step.
pub struct OracleRun {
    pub times: Vec<(f64, f64)>,
    pub max_step_bits: f64,
}

/// Processor-sharing link advanced in steps of at most 1 ms. Within a step
/// the set of open transfers only changes at the step edge or at an
/// exactly computed release or completion, so the fluid shares are exact.
pub fn waterfall_oracle(plan: &Plan, rtt: f64, capacity: f64) -> OracleRun {
    let n = plan.requests.len();
    let index_of = |id: u64| plan.requests.iter().position(|r| r.id == id).unwrap();
    let parent: Vec<Option<usize>> = plan.requests.iter().map(|r| r.parent_id.map(index_of)).collect();
    let offset = |i: usize| plan.requests[i].discovery_offset_ms;

    let mut release: Vec<Option<f64>> = (0..n).map(|i| parent[i].is_none().then(|| offset(i) + rtt)).collect();
    let mut end: Vec<Option<f64>> = vec![None; n];
    let mut left: Vec<f64> = plan.requests.iter().map(|r| r.bytes as f64 * 8.0).collect();

    let mut now = 0.0f64;
    let mut max_step_bits = 0.0f64;
    let mut step_bits = 0.0f64;
    let mut step = 0i64;
    loop {
        // settle everything that happens at `now`
        loop {
            let mut changed = false;
            for i in 0..n {
                if end[i].is_none() && release[i] == Some(now) && left[i] <= 0.0 {
                    end[i] = Some(now);
                    changed = true;
                }
                if release[i].is_none() {
                    if let Some(pe) = parent[i].and_then(|p| end[p]) {
                        release[i] = Some(pe + offset(i) + rtt);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if end.iter().all(Option::is_some) {
            break;
        }

        let open: Vec<usize> = (0..n)
            .filter(|&i| end[i].is_none() && release[i].is_some_and(|r| r <= now))
            .collect();
        let rate = if open.is_empty() {
            0.0
        } else {
            capacity / open.len() as f64
        };
        let min_left = open.iter().map(|&i| left[i]).fold(f64::INFINITY, f64::min);
        let next_finish = if open.is_empty() {
            f64::INFINITY
        } else {
            now + min_left / rate
        };
        let next_release = (0..n)
            .filter(|&i| end[i].is_none())
            .filter_map(|i| release[i].filter(|&r| r > now))
            .fold(f64::INFINITY, f64::min);
        let next = (now.floor() + 1.0).min(next_release).min(next_finish);

        let dt = next - now;
        for &i in &open {
            if next == next_finish && left[i] - min_left <= 1e-9 * min_left.max(1.0) {
                left[i] = 0.0;
                end[i] = Some(next);
            } else {
                left[i] -= rate * dt;
            }
        }
        // [now, next) lies inside the step that contains `now`
        if now.floor() as i64 != step {
            max_step_bits = max_step_bits.max(step_bits);
            step = now.floor() as i64;
            step_bits = 0.0;
        }
        step_bits += rate * dt * open.len() as f64;
        now = next;
    }
    max_step_bits = max_step_bits.max(step_bits);

    OracleRun {
        times: (0..n).map(|i| (release[i].unwrap(), end[i].unwrap())).collect(),
        max_step_bits,
    }
}

// -------------------------------------------------------------- generators

/// Page-load traces on a whole-millisecond grid (visual samples on a
/// quarter-millisecond grid with fractions in 1/64 steps, so every value is
/// exact in binary).
pub fn arb_trace() -> impl Strategy<Value = Trace> {
    let tasks = prop::collection::vec((0u32..400, 1u32..200), 0..=10);
    let requests = prop::collection::vec((0u32..3000, 0u32..200, 0u32..2500, 0u64..300_000), 0..=6);
    let visual = prop::collection::vec((1u32..400, 1u32..8), 1..=50);
    let paints = (0u32..3000, prop::collection::vec((0u32..2000, 1u32..10), 0..4));
    (tasks, requests, visual, paints).prop_map(|(tasks, requests, visual, (fcp, fmps))| {
        let mut t = 0u32;
        let tasks = tasks
            .into_iter()
            .map(|(gap, dur)| {
                let start = t + gap;
                t = start + dur;
                Task {
                    start_ms: f64::from(start),
                    dur_ms: f64::from(dur),
                }
            })
            .collect();
        let mut requests: Vec<Request<f64>> = requests
            .into_iter()
            .enumerate()
            .map(|(i, (d, wait, span, bytes))| Request {
                discovered_ms: f64::from(d),
                start_ms: f64::from(d + wait),
                end_ms: f64::from(d + wait + span),
                bytes,
                origin: format!("o{}.test", i % 2),
            })
            .collect();
        requests.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));

        let mut paint_events = vec![PaintEvent {
            t_ms: f64::from(fcp),
            kind: PaintKind::ContentfulPaint,
            significance: None,
        }];
        if fcp > 0 {
            paint_events.push(PaintEvent {
                t_ms: f64::from(fcp / 2),
                kind: PaintKind::FirstPaint,
                significance: None,
            });
        }
        for (offset, sig) in fmps {
            paint_events.push(PaintEvent {
                t_ms: f64::from(fcp + offset),
                kind: PaintKind::FmpCandidate,
                significance: Some(f64::from(sig)),
            });
        }

        let steps: u32 = visual.iter().map(|v| v.1).sum();
        let (mut t, mut acc) = (0u32, 0u32);
        let mut visual_progress: Vec<VisualSample<f64>> = visual
            .into_iter()
            .map(|(gap, step)| {
                t += gap;
                acc += step;
                VisualSample {
                    t_ms: f64::from(t) * 0.25,
                    fraction: (f64::from(acc) / f64::from(steps) * 64.0).floor() / 64.0,
                }
            })
            .collect();
        visual_progress.last_mut().unwrap().fraction = 1.0;

        Trace {
            nav_start: 0.0,
            paint_events,
            tasks,
            requests,
            visual_progress,
        }
        .validated()
        .expect("generated trace is valid")
    })
}

/// Plans of up to five requests; parents always precede children.
pub fn arb_plan() -> impl Strategy<Value = Plan> {
    prop::collection::vec(
        (any::<prop::sample::Index>(), any::<bool>(), 0u32..300, 0u64..150_000),
        1..=5,
    )
    .prop_map(|reqs| WaterfallPlan {
        requests: reqs
            .into_iter()
            .enumerate()
            .map(|(i, (pick, has_parent, offset, bytes))| PlannedRequest {
                id: 10 + i as u64,
                parent_id: (i > 0 && has_parent).then(|| 10 + pick.index(i) as u64),
                discovery_offset_ms: f64::from(offset),
                bytes,
                origin: String::new(),
            })
            .collect(),
    })
}

pub fn arb_link() -> impl Strategy<Value = (f64, f64)> {
    (0u32..300, 100u32..5000).prop_map(|(rtt, kbps)| (f64::from(rtt), f64::from(kbps)))
}

pub fn link_profile(rtt: f64, kbps: f64) -> Profile {
    Profile {
        rtt_ms: rtt,
        downlink_kbps: kbps,
        uplink_kbps: kbps,
        cpu_multiplier: 1.0,
    }
}
