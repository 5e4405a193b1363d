//! Regenerates the checked-in test fixtures under `tests/fixtures`.
//!
//! * `traces/<no>.<mode>.json`: one recorded trace per region and mode. Each
//!   is a fixed page-load template stretched by a factor found by bisection,
//!   so that its audited score rounds to the region's target mean.
//! * `traces/13.json`: a page that never paints content.
//! * `corpus12.csv`, `corpus13.csv`: the fixture corpora (plus two
//!   non-member rows that the batch filters out).
//! * `corpus_1012.csv`: a synthetic inventory with 530 member rows.
//!
//! Run with `cargo run --example make_fixtures [-- OUT_DIR]`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use perfaudit::collector::{write_trace, DeviceKind};
use perfaudit::config::Calibration;
use perfaudit::corpus::audit_trace;
use perfaudit::scalar::round_half_away;
use perfaudit::trace_metrics::{PaintEvent, PaintKind, Request, Task, VisualSample};
use perfaudit::{Profile, Trace};

/// (region, mobile target, web target, institution, url)
const SITES: [(&str, f64, f64, &str, &str); 12] = [
    (
        "Web SKPD Provinsi",
        26.98,
        47.51,
        "Dinas Komunikasi dan Informatika",
        "https://diskominfo.jabarprov.go.id",
    ),
    (
        "Kab. Bogor",
        11.94,
        40.28,
        "Pemerintah Kabupaten Bogor",
        "https://bogorkab.go.id",
    ),
    (
        "Kab. Bandung",
        53.10,
        72.21,
        "Pemerintah Kabupaten Bandung",
        "https://bandungkab.go.id",
    ),
    (
        "Kab. Indramayu",
        48.42,
        76.77,
        "Pemerintah Kabupaten Indramayu",
        "https://indramayukab.go.id",
    ),
    (
        "Kota Bogor",
        32.83,
        76.33,
        "Pemerintah Kota Bogor",
        "https://kotabogor.go.id",
    ),
    (
        "Kota Bandung",
        84.61,
        98.68,
        "Pemerintah Kota Bandung",
        "https://bandung.go.id",
    ),
    (
        "Kota Bekasi",
        22.79,
        47.62,
        "Pemerintah Kota Bekasi",
        "https://bekasikota.go.id",
    ),
    (
        "Kota Cimahi",
        65.20,
        79.70,
        "Pemerintah Kota Cimahi",
        "https://cimahikota.go.id",
    ),
    (
        "Kota Depok",
        46.90,
        74.50,
        "Pemerintah Kota Depok",
        "https://depok.go.id",
    ),
    (
        "Kota Sukabumi",
        40.86,
        83.00,
        "Pemerintah Kota Sukabumi",
        "https://sukabumikota.go.id",
    ),
    (
        "Kota Cirebon",
        29.62,
        64.46,
        "Pemerintah Kota Cirebon",
        "https://cirebonkota.go.id",
    ),
    (
        "Kab. Cirebon",
        1.40,
        1.81,
        "Pemerintah Kabupaten Cirebon",
        "https://cirebonkab.go.id",
    ),
];

const NON_MEMBERS: [&str; 15] = [
    "Kab. Garut",
    "Kab. Sumedang",
    "Kab. Cianjur",
    "Kab. Sukabumi",
    "Kab. Tasikmalaya",
    "Kota Tasikmalaya",
    "Kab. Ciamis",
    "Kab. Kuningan",
    "Kab. Majalengka",
    "Kab. Subang",
    "Kab. Purwakarta",
    "Kab. Karawang",
    "Kab. Bekasi",
    "Kab. Bandung Barat",
    "Kota Banjar",
];

fn q(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// A small page: document, stylesheet, script and one image; a few
/// main-thread tasks; paints tied to the resources. Times and sizes scale
/// with `k`.
fn template(k: f64) -> Trace {
    let t = |ms: f64| q(ms * k);
    let bytes = |b: f64| (b * k).round() as u64;
    let req = |d: f64, s: f64, e: f64, b: f64, origin: &str| Request {
        discovered_ms: t(d),
        start_ms: t(s),
        end_ms: t(e),
        bytes: bytes(b),
        origin: origin.to_string(),
    };
    let paint = |ms: f64, kind, significance| PaintEvent {
        t_ms: t(ms),
        kind,
        significance,
    };
    Trace {
        nav_start: 0.0,
        paint_events: vec![
            paint(180.0, PaintKind::FirstPaint, None),
            paint(200.0, PaintKind::ContentfulPaint, None),
            paint(200.0, PaintKind::FmpCandidate, Some(1.0)),
            paint(450.0, PaintKind::FmpCandidate, Some(3.0)),
        ],
        tasks: vec![
            Task {
                start_ms: t(42.0),
                dur_ms: t(30.0),
            },
            Task {
                start_ms: t(155.0),
                dur_ms: t(60.0),
            },
            Task {
                start_ms: t(420.0),
                dur_ms: t(40.0),
            },
            Task {
                start_ms: t(700.0),
                dur_ms: t(120.0),
            },
        ],
        requests: vec![
            req(0.0, 0.0, 40.0, 20_000.0, "site.test"),
            req(45.0, 46.0, 90.0, 15_000.0, "site.test"),
            req(45.0, 47.0, 150.0, 60_000.0, "cdn.test"),
            req(200.0, 201.0, 400.0, 80_000.0, "site.test"),
        ],
        visual_progress: vec![
            VisualSample {
                t_ms: t(200.0),
                fraction: 0.3,
            },
            VisualSample {
                t_ms: t(450.0),
                fraction: 0.8,
            },
            VisualSample {
                t_ms: t(800.0),
                fraction: 1.0,
            },
        ],
    }
}

fn score(k: f64, mode: DeviceKind, cal: &Calibration, throttle: &Profile) -> f64 {
    let (_, report) = audit_trace(&template(k), mode, throttle, cal).expect("template audits");
    report.performance_score
}

/// Finds a stretch factor whose score rounds to `target`.
fn fit(target: f64, mode: DeviceKind, cal: &Calibration, throttle: &Profile) -> (f64, f64) {
    let (mut lo, mut hi) = (1e-3_f64, 1e3_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let s = score(mid, mode, cal, throttle);
        if round_half_away(s, 2) == target {
            return (mid, s);
        }
        // score falls as the page gets slower
        if s > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    panic!("no stretch factor reaches {target} for {mode}");
}

fn no_paint_trace() -> Trace {
    let mut t = template(1.0);
    t.paint_events.retain(|p| p.kind == PaintKind::FirstPaint);
    t.visual_progress.clear();
    t
}

fn corpus_rows(extra: bool) -> String {
    let mut s = String::from("no,institution,tier,region,url\n");
    for (i, (region, _, _, inst, url)) in SITES.iter().enumerate() {
        let tier = if i == 0 { "provinsi" } else { "kabupaten-kota" };
        let _ = writeln!(s, "{},{},{},{},{}", i + 1, inst, tier, region, url);
    }
    if extra {
        s.push_str("13,\"Kecamatan Beji, Depok\",kecamatan,Kota Depok,https://beji.depok.go.id\n");
    }
    s.push_str("20,Pemerintah Kabupaten Garut,kabupaten-kota,Kab. Garut,https://garutkab.go.id\n");
    s.push_str("21,Pemerintah Kabupaten Sumedang,kabupaten-kota,Kab. Sumedang,https://sumedangkab.go.id\n");
    s
}

/// 1012 rows; 530 of them in member regions, some spelled loosely.
fn synthetic_corpus() -> String {
    const TIERS: [&str; 3] = ["kabupaten-kota", "kecamatan", "desa"];
    let mut s = String::from("no,institution,tier,region,url\n");
    let mut no = 0u32;
    let mut row = |s: &mut String, region: &str, tier: &str, slug: &str| {
        no += 1;
        let _ = writeln!(s, "{no},Instansi {no},{tier},{region},https://{slug}-{no}.go.id");
    };
    for i in 0..530 {
        let (region, ..) = SITES[i % SITES.len()];
        let spelled = match i % 7 {
            3 => region.to_uppercase(),
            5 => format!("\"  {}  \"", region.replace(' ', "  ")),
            _ => region.to_string(),
        };
        let tier = if i % SITES.len() == 0 { "provinsi" } else { TIERS[i % 3] };
        row(&mut s, &spelled, tier, "m");
    }
    for i in 0..482 {
        row(&mut s, NON_MEMBERS[i % NON_MEMBERS.len()], TIERS[i % 3], "n");
    }
    s
}

fn main() {
    let out: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    let traces = out.join("traces");
    fs::create_dir_all(&traces).expect("create fixture dirs");

    let cal = Calibration::default();
    let throttle = cal.resolve_profile("4g").expect("4g profile");
    for (i, &(region, mobile, web, ..)) in SITES.iter().enumerate() {
        for (mode, target) in [(DeviceKind::Mobile, mobile), (DeviceKind::Desktop, web)] {
            let (k, s) = fit(target, mode, &cal, &throttle);
            let path = traces.join(format!("{}.{mode}.json", i + 1));
            write_trace(&path, &template(k)).expect("write trace");
            println!("{region:>18} {mode:>7}: k = {k:.6}, score = {s:.6}");
        }
    }
    write_trace(&traces.join("13.json"), &no_paint_trace()).expect("write trace");
    fs::write(out.join("corpus12.csv"), corpus_rows(false)).expect("write corpus");
    fs::write(out.join("corpus13.csv"), corpus_rows(true)).expect("write corpus");
    fs::write(out.join("corpus_1012.csv"), synthetic_corpus()).expect("write corpus");
}
