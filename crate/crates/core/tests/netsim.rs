mod common;

use common::{arb_link, arb_plan, arb_trace, link_profile, waterfall_oracle};
use perfaudit::netsim::{apply_throttle, simulate_waterfall, NetsimError, PlannedRequest, WaterfallPlan};
use perfaudit::{Plan, Profile};
use proptest::prelude::*;

fn req(id: u64, parent_id: Option<u64>, offset: f64, bytes: u64) -> PlannedRequest<f64> {
    PlannedRequest {
        id,
        parent_id,
        discovery_offset_ms: offset,
        bytes,
        origin: String::new(),
    }
}

fn by_plan_order(plan: &Plan, profile: &Profile) -> Vec<(f64, f64)> {
    let out = simulate_waterfall(plan, profile).unwrap();
    plan.requests
        .iter()
        .map(|r| {
            let s = out.iter().find(|s| s.id == r.id).unwrap();
            (s.start_ms, s.end_ms)
        })
        .collect()
}

#[test]
fn chained_requests_under_4g() {
    let plan = WaterfallPlan {
        requests: vec![
            req(1, None, 0.0, 20_000),
            req(2, Some(1), 10.0, 60_000),
            req(3, Some(2), 0.0, 10_000),
        ],
    };
    let out = simulate_waterfall(&plan, &Profile::simulated_4g()).unwrap();
    let c = 1638.0;
    let e1 = 150.0 + 160_000.0 / c;
    let e2 = e1 + 10.0 + 150.0 + 480_000.0 / c;
    let e3 = e2 + 150.0 + 80_000.0 / c;
    for (got, want) in out.iter().zip([(150.0, e1), (e1 + 160.0, e2), (e2 + 150.0, e3)]) {
        assert!((got.start_ms - want.0).abs() < 1e-9, "{got:?}");
        assert!((got.end_ms - want.1).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn two_parallel_transfers_share_the_link() {
    let plan = WaterfallPlan {
        requests: vec![req(1, None, 0.0, 1000), req(2, None, 0.0, 2000)],
    };
    // 1000 kbps is one bit per microsecond: 8000 bits each at half rate
    let out = simulate_waterfall(&plan, &link_profile(0.0, 1000.0)).unwrap();
    assert!((out[0].end_ms - 16.0).abs() < 1e-9);
    // then the second one finishes its remaining 8000 bits alone
    assert!((out[1].end_ms - 24.0).abs() < 1e-9);
}

#[test]
fn plan_errors() {
    let p = Profile::simulated_4g();
    let dup = WaterfallPlan {
        requests: vec![req(1, None, 0.0, 1), req(1, None, 0.0, 1)],
    };
    assert_eq!(simulate_waterfall(&dup, &p), Err(NetsimError::DuplicateId(1)));
    let orphan = WaterfallPlan {
        requests: vec![req(1, Some(9), 0.0, 1)],
    };
    assert_eq!(
        simulate_waterfall(&orphan, &p),
        Err(NetsimError::UnknownParent { id: 1, parent_id: 9 })
    );
    let cycle = WaterfallPlan {
        requests: vec![req(1, Some(2), 0.0, 1), req(2, Some(1), 0.0, 1)],
    };
    assert!(matches!(
        simulate_waterfall(&cycle, &p),
        Err(NetsimError::CyclicPlan(_))
    ));
    let bad = Profile {
        downlink_kbps: 0.0,
        ..p
    };
    assert!(matches!(
        simulate_waterfall(&WaterfallPlan::default(), &bad),
        Err(NetsimError::InvalidProfile(_))
    ));
}

#[test]
fn empty_plan_is_empty() {
    assert!(
        simulate_waterfall(&WaterfallPlan::<f64>::default(), &Profile::simulated_4g())
            .unwrap()
            .is_empty()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_step_oracle(plan in arb_plan(), (rtt, kbps) in arb_link()) {
        let got = by_plan_order(&plan, &link_profile(rtt, kbps));
        let want = waterfall_oracle(&plan, rtt, kbps);
        for (g, w) in got.iter().zip(&want.times) {
            prop_assert!((g.0 - w.0).abs() <= 1.0, "start {g:?} vs {w:?}");
            prop_assert!((g.1 - w.1).abs() <= 1.0, "end {g:?} vs {w:?}");
        }
    }

    #[test]
    fn link_never_exceeds_capacity(plan in arb_plan(), (rtt, kbps) in arb_link()) {
        let run = waterfall_oracle(&plan, rtt, kbps);
        prop_assert!(run.max_step_bits <= kbps * (1.0 + 1e-9));

        let got = by_plan_order(&plan, &link_profile(rtt, kbps));
        let first = got.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
        let last = got.iter().map(|g| g.1).fold(0.0, f64::max);
        let bits: f64 = plan.requests.iter().map(|r| r.bytes as f64 * 8.0).sum();
        prop_assert!(last - first >= bits / kbps * (1.0 - 1e-9));
    }

    #[test]
    fn starts_follow_parents(plan in arb_plan(), (rtt, kbps) in arb_link()) {
        let got = by_plan_order(&plan, &link_profile(rtt, kbps));
        for (i, r) in plan.requests.iter().enumerate() {
            let parent_end = r.parent_id.map_or(0.0, |p| got[(p - 10) as usize].1);
            prop_assert!((got[i].0 - (parent_end + r.discovery_offset_ms + rtt)).abs() <= 1e-9 * got[i].0.max(1.0));
            prop_assert!(got[i].1 >= got[i].0);
        }
    }

    #[test]
    fn slower_link_never_finishes_earlier(plan in arb_plan(), (rtt, kbps) in arb_link(), cut in 0.1f64..1.0) {
        let fast = by_plan_order(&plan, &link_profile(rtt, kbps));
        let slow = by_plan_order(&plan, &link_profile(rtt, kbps * cut));
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!(s.1 >= f.1 - 1e-9 * f.1.max(1.0), "{f:?} vs {s:?}");
        }
    }

    #[test]
    fn longer_rtt_never_starts_earlier(plan in arb_plan(), (rtt, kbps) in arb_link(), extra in 0u32..300) {
        let near = by_plan_order(&plan, &link_profile(rtt, kbps));
        let far = by_plan_order(&plan, &link_profile(rtt + f64::from(extra), kbps));
        for (a, b) in near.iter().zip(&far) {
            prop_assert!(b.0 >= a.0 - 1e-9 * a.0.max(1.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn deterministic(plan in arb_plan(), (rtt, kbps) in arb_link()) {
        let p = link_profile(rtt, kbps);
        prop_assert_eq!(simulate_waterfall(&plan, &p).unwrap(), simulate_waterfall(&plan, &p).unwrap());
    }

    #[test]
    fn identity_profile_is_fixed_point(t in arb_trace()) {
        prop_assert_eq!(apply_throttle(&t, &Profile::identity()).unwrap(), t);
    }

    #[test]
    fn throttled_trace_stays_valid(t in arb_trace(), (rtt, kbps) in arb_link(), cpu in 1u32..6) {
        let p = link_profile(rtt, kbps).with_cpu_multiplier(f64::from(cpu));
        let out = apply_throttle(&t, &p).unwrap();
        prop_assert!(out.clone().validated().is_ok());
        for (a, b) in t.requests.iter().zip(&out.requests) {
            prop_assert!(b.end_ms >= a.end_ms);
        }
    }
}
