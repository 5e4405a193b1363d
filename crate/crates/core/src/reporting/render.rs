use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{overall_average, OverallAverage, RegionAggregate, ReportError};
use crate::collector::DeviceKind;
use crate::corpus::AuditResult;

const TABLE_HEADER: [&str; 5] = [
    "No",
    "Daerah",
    "Rata-rata Skor Mobile",
    "Rata-rata Skor Web",
    "Tanggal Uji",
];
const COUNT_HEADER: [&str; 3] = ["OK Mobile", "OK Web", "Gagal"];
const TOTAL_LABEL: &str = "Rata-rata total";
const DATE_FORMAT: &str = "%d/%m/%y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Md,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Md),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Print `84,61` instead of `84.61` in the markdown table.
    pub decimal_comma: bool,
}

/// One bar group of the per-region chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub region: String,
    pub mobile: Option<f64>,
    pub web: Option<f64>,
}

/// A site listed for manual checking or as failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteEntry {
    pub no: u32,
    pub institution: String,
    pub region: String,
    pub url: String,
    pub mode: DeviceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Everything a report shows, in the shape of the JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub regions: Vec<RegionAggregate>,
    pub overall: Option<OverallAverage>,
    pub chart_data: Vec<ChartPoint>,
    pub manual_validation: Vec<SiteEntry>,
    pub failures: Vec<SiteEntry>,
}

impl ReportDocument {
    pub fn build(aggregates: &[RegionAggregate], results: &[AuditResult]) -> Self {
        let entry = |r: &AuditResult| SiteEntry {
            no: r.site.no,
            institution: r.site.institution.clone(),
            region: r.site.region.clone(),
            url: r.site.url.clone(),
            mode: r.mode,
            score: r.performance_score(),
            reason: r.failure_reason().map(str::to_string),
        };
        Self {
            regions: aggregates.to_vec(),
            overall: (!aggregates.is_empty()).then(|| overall_average(aggregates)),
            chart_data: aggregates
                .iter()
                .map(|a| ChartPoint {
                    region: a.region.clone(),
                    mobile: a.raw_mean_mobile,
                    web: a.raw_mean_web,
                })
                .collect(),
            manual_validation: results
                .iter()
                .filter(|r| r.is_ok() && r.outlier_flag)
                .map(entry)
                .collect(),
            failures: results.iter().filter(|r| !r.is_ok()).map(entry).collect(),
        }
    }
}

/// Renders the region table, chart data, manual-validation list and
/// failures in the chosen format.
pub fn emit_report(
    aggregates: &[RegionAggregate],
    results: &[AuditResult],
    format: ReportFormat,
    opts: ReportOptions,
) -> Result<String, ReportError> {
    let doc = ReportDocument::build(aggregates, results);
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| ReportError::Render(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Md => Ok(render_md(&doc, opts)),
        ReportFormat::Csv => render_csv(&doc),
    }
}

fn fixed(v: Option<f64>, decimals: usize, comma: bool) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.decimals$}");
            if comma {
                s.replace('.', ",")
            } else {
                s
            }
        }
        None => "-".into(),
    }
}

fn date(d: Option<NaiveDate>) -> String {
    d.map_or_else(|| "-".into(), |d| d.format(DATE_FORMAT).to_string())
}

/// Shortest text that reads back to the same float.
fn exact(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn mode_label(mode: DeviceKind) -> &'static str {
    match mode {
        DeviceKind::Mobile => "mobile",
        DeviceKind::Desktop => "web",
    }
}

fn render_md(doc: &ReportDocument, opts: ReportOptions) -> String {
    let c = opts.decimal_comma;
    let mut s = String::new();
    s.push_str("# Hasil uji performa website\n\n");
    let _ = writeln!(s, "| {} |", TABLE_HEADER.join(" | "));
    s.push_str("|---:|:---|---:|---:|:---:|\n");
    for (i, a) in doc.regions.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            md_cell(&a.region),
            fixed(a.mean_mobile, 2, c),
            fixed(a.mean_web, 2, c),
            date(a.test_date)
        );
    }
    if let Some(o) = &doc.overall {
        let _ = writeln!(
            s,
            "|  | **{TOTAL_LABEL}** | **{}** | **{}** | {} |",
            fixed(o.mobile, 1, c),
            fixed(o.web, 1, c),
            date(o.test_date)
        );
    }

    s.push_str("\n## Audit counts\n\n| Daerah | OK mobile | OK web | Failed |\n|:---|---:|---:|---:|\n");
    for a in &doc.regions {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} |",
            md_cell(&a.region),
            a.n_ok_mobile,
            a.n_ok_web,
            a.n_failed
        );
    }

    s.push_str("\n## Chart data\n\nUnrounded region means, one bar group per region.\n\n");
    s.push_str("| Daerah | Mobile | Web |\n|:---|---:|---:|\n");
    for p in &doc.chart_data {
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            md_cell(&p.region),
            fixed(p.mobile, 4, false),
            fixed(p.web, 4, false)
        );
    }

    s.push_str("\n## Manual validation\n\nScores at either end of the scale.\n\n");
    s.push_str("| No | Institution | Daerah | Mode | Score | URL |\n|---:|:---|:---|:---|---:|:---|\n");
    for e in &doc.manual_validation {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            e.no,
            md_cell(&e.institution),
            md_cell(&e.region),
            mode_label(e.mode),
            fixed(e.score, 2, c),
            md_cell(&e.url)
        );
    }

    s.push_str("\n## Failures\n\n");
    s.push_str("| No | Institution | Daerah | Mode | Reason |\n|---:|:---|:---|:---|:---|\n");
    for e in &doc.failures {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            e.no,
            md_cell(&e.institution),
            md_cell(&e.region),
            mode_label(e.mode),
            md_cell(e.reason.as_deref().unwrap_or(""))
        );
    }
    s
}

fn csv_block(rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| ReportError::Render(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Render(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Render(e.to_string()))
}

fn strings<const N: usize>(a: [&str; N]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

/// Four blocks separated by blank lines: region table, chart data,
/// manual validation, failures. Each block starts with its header row.
fn render_csv(doc: &ReportDocument) -> Result<String, ReportError> {
    let mut table = vec![TABLE_HEADER
        .iter()
        .chain(COUNT_HEADER.iter())
        .map(|s| s.to_string())
        .collect()];
    for (i, a) in doc.regions.iter().enumerate() {
        table.push(vec![
            (i + 1).to_string(),
            a.region.clone(),
            fixed(a.mean_mobile, 2, false),
            fixed(a.mean_web, 2, false),
            date(a.test_date),
            a.n_ok_mobile.to_string(),
            a.n_ok_web.to_string(),
            a.n_failed.to_string(),
        ]);
    }
    if let Some(o) = &doc.overall {
        table.push(vec![
            String::new(),
            TOTAL_LABEL.into(),
            fixed(o.mobile, 1, false),
            fixed(o.web, 1, false),
            date(o.test_date),
        ]);
    }

    let mut chart = vec![strings(["Daerah", "Mobile", "Web"])];
    chart.extend(
        doc.chart_data
            .iter()
            .map(|p| vec![p.region.clone(), exact(p.mobile), exact(p.web)]),
    );

    let site_header = ["No", "Institution", "Daerah", "Mode", "URL"];
    let site_row = |e: &SiteEntry, last: String| {
        vec![
            e.no.to_string(),
            e.institution.clone(),
            e.region.clone(),
            mode_label(e.mode).to_string(),
            e.url.clone(),
            last,
        ]
    };
    let mut manual = vec![site_header.iter().chain(&["Score"]).map(|s| s.to_string()).collect()];
    manual.extend(
        doc.manual_validation
            .iter()
            .map(|e| site_row(e, fixed(e.score, 2, false))),
    );
    let mut failures = vec![site_header.iter().chain(&["Reason"]).map(|s| s.to_string()).collect()];
    failures.extend(
        doc.failures
            .iter()
            .map(|e| site_row(e, e.reason.clone().unwrap_or_default())),
    );

    let blocks = [
        csv_block(table)?,
        csv_block(chart)?,
        csv_block(manual)?,
        csv_block(failures)?,
    ];
    Ok(blocks.join("\n"))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>, ReportError> {
    match s.trim() {
        "" | "-" => Ok(None),
        t => t.parse().map(Some).map_err(|_| ReportError::Parse {
            line,
            message: format!("`{t}` is not a number"),
        }),
    }
}

/// Reads the region rows back out of a CSV report.
pub fn parse_report_csv(text: &str) -> Result<Vec<RegionAggregate>, ReportError> {
    let mut blocks = text.split("\n\n");
    let table = blocks.next().unwrap_or("");
    let chart = blocks.next().unwrap_or("");
    let chart_line0 = table.lines().count() + 2;

    let perr = |line: usize, message: String| ReportError::Parse { line, message };
    let mut out = Vec::new();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(table.as_bytes());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        let get = |k: usize| rec.get(k).unwrap_or("");
        if get(1) == TOTAL_LABEL && get(0).is_empty() {
            continue;
        }
        let count = |k: usize| get(k).parse::<u32>().map_err(|e| perr(line, e.to_string()));
        let test_date = match get(4) {
            "-" | "" => None,
            d => Some(NaiveDate::parse_from_str(d, DATE_FORMAT).map_err(|e| perr(line, e.to_string()))?),
        };
        out.push(RegionAggregate {
            region: get(1).to_string(),
            mean_mobile: parse_opt(get(2), line)?,
            mean_web: parse_opt(get(3), line)?,
            n_ok_mobile: count(5)?,
            n_ok_web: count(6)?,
            n_failed: count(7)?,
            test_date,
            raw_mean_mobile: None,
            raw_mean_web: None,
        });
    }

    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(chart.as_bytes());
    for (i, rec) in rdr.records().enumerate() {
        let line = chart_line0 + i + 1;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        let agg = out
            .get_mut(i)
            .filter(|a| a.region == rec.get(0).unwrap_or(""))
            .ok_or_else(|| perr(line, "chart data does not follow the region table".into()))?;
        agg.raw_mean_mobile = parse_opt(rec.get(1).unwrap_or(""), line)?;
        agg.raw_mean_web = parse_opt(rec.get(2).unwrap_or(""), line)?;
    }
    Ok(out)
}

/// Reads the region rows back out of a JSON report.
pub fn parse_report_json(text: &str) -> Result<Vec<RegionAggregate>, ReportError> {
    let doc: ReportDocument = serde_json::from_str(text).map_err(|e| ReportError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(doc.regions)
}
