use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use perfaudit::collector::{
    capture_raw, load_trace, write_trace, BrowserEndpoint, CaptureRequest, DeviceKind, ReplayDir, DEFAULT_SETTLE_MS,
    ENDPOINT_ENV,
};
use perfaudit::config::Calibration;
use perfaudit::corpus::{
    audit_trace, ingest_corpus, membership_filter, read_results, run_batch, write_results, AuditResult, BatchOptions,
    LiveSource, MemberRegions, TraceSource,
};
use perfaudit::netsim::simulate_waterfall;
use perfaudit::reporting::{aggregate_regions, emit_report, RegionAggregate, ReportFormat, ReportOptions};
use perfaudit::{Plan, Profile, Trace};

/// Per-item failures happened but the command itself completed.
const EXIT_ITEM_FAILURES: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "perfaudit",
    version,
    about = "Page-load performance audits for website inventories"
)]
struct Cli {
    /// Calibration file (weights, curves, profiles). Defaults to the built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    calibration: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a single URL, live or from a stored trace.
    Audit(AuditArgs),
    /// Audit every member site of a corpus in each device mode.
    Batch(BatchArgs),
    /// Print metrics and scores for one stored trace.
    Score(ScoreArgs),
    /// Average batch results per region.
    Aggregate(AggregateArgs),
    /// Render the region table, chart data and validation lists.
    Report(ReportArgs),
    /// Run the network waterfall simulator on a request plan.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct AuditArgs {
    url: String,
    #[arg(long, default_value = "mobile")]
    mode: DeviceKind,
    /// Profile name from the calibration file, or a profile JSON file.
    #[arg(long, default_value = "4g")]
    throttle: String,
    /// Save the unthrottled trace of the reported run.
    #[arg(long, value_name = "FILE", conflicts_with = "trace_in")]
    trace_out: Option<PathBuf>,
    /// Score a stored trace instead of loading the page.
    #[arg(long, value_name = "FILE")]
    trace_in: Option<PathBuf>,
    /// Number of runs; the run with the median score is reported.
    #[arg(long, default_value_t = NonZeroUsize::MIN)]
    repeat: NonZeroUsize,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Member-region list; defaults to the built-in one.
    #[arg(long, value_name = "FILE")]
    members: Option<PathBuf>,
    /// Directory of stored traces. Without it pages are captured live.
    #[arg(long, value_name = "DIR")]
    traces: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "mobile,desktop")]
    modes: Vec<DeviceKind>,
    #[arg(long, default_value = "4g")]
    throttle: String,
    #[arg(long, default_value_t = NonZeroUsize::MIN)]
    parallel: NonZeroUsize,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Test date recorded on every result (YYYY-MM-DD); defaults to today.
    #[arg(long)]
    date: Option<NaiveDate>,
    /// Audit every corpus row, not only member regions.
    #[arg(long)]
    all: bool,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    trace: PathBuf,
    #[arg(long, default_value = "mobile")]
    mode: DeviceKind,
    #[arg(long, default_value = "4g")]
    throttle: String,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long, value_name = "FILE")]
    results: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, value_name = "FILE")]
    members: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_name = "FILE")]
    aggregates: PathBuf,
    #[arg(long, value_name = "FILE")]
    results: Option<PathBuf>,
    #[arg(long, default_value = "md")]
    format: String,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Use a decimal comma in the markdown table.
    #[arg(long)]
    decimal_comma: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
    #[arg(long, default_value = "4g")]
    profile: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cal = match &cli.calibration {
        Some(path) => Calibration::load(path)?,
        None => Calibration::default(),
    };
    match cli.command {
        Command::Audit(a) => audit(&cal, a),
        Command::Batch(a) => batch(&cal, a),
        Command::Score(a) => score(&cal, a),
        Command::Aggregate(a) => aggregate(a),
        Command::Report(a) => report(a),
        Command::Simulate(a) => simulate(&cal, a),
    }
}

fn exit_for(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ITEM_FAILURES)
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn endpoint() -> Result<BrowserEndpoint> {
    match BrowserEndpoint::from_env() {
        Some(e) => Ok(e?),
        None => bail!("live capture needs {ENDPOINT_ENV}=host:port of a browser debugging endpoint"),
    }
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn audit(cal: &Calibration, a: AuditArgs) -> Result<ExitCode> {
    let throttle = cal.resolve_profile(&a.throttle)?;
    let mut runs: Vec<(Trace, perfaudit::Metrics, perfaudit::Report)> = Vec::new();
    let mut last_error = None;
    for _ in 0..a.repeat.get() {
        let raw = match &a.trace_in {
            Some(path) => load_trace(path),
            None => {
                let req = CaptureRequest {
                    url: a.url.clone(),
                    mode: *cal.modes.get(a.mode),
                    throttle: Profile::identity(),
                    timeout_ms: cal.navigation_timeout_ms,
                };
                capture_raw(&req, &endpoint()?, DEFAULT_SETTLE_MS)
            }
        };
        match raw
            .map_err(Into::into)
            .and_then(|raw| audit_trace(&raw, a.mode, &throttle, cal).map(|(m, r)| (raw, m, r)))
        {
            Ok(run) => runs.push(run),
            Err(e) => last_error = Some(e.to_string()),
        }
    }

    if runs.is_empty() {
        print_json(&json!({
            "url": a.url,
            "mode": a.mode,
            "status": {"failed": last_error.unwrap_or_default()},
        }))?;
        return Ok(ExitCode::from(EXIT_ITEM_FAILURES));
    }
    runs.sort_by(|x, y| x.2.performance_score.total_cmp(&y.2.performance_score));
    let (raw, metrics, report) = &runs[(runs.len() - 1) / 2];
    if let Some(path) = &a.trace_out {
        write_trace(path, raw)?;
    }
    print_json(&json!({
        "url": a.url,
        "mode": a.mode,
        "runs": runs.len(),
        "metrics": metrics,
        "report": report,
        "status": "ok",
    }))?;
    Ok(exit_for(a.repeat.get() - runs.len()))
}

fn batch(cal: &Calibration, a: BatchArgs) -> Result<ExitCode> {
    let members = match &a.members {
        Some(path) => MemberRegions::load(path)?,
        None => MemberRegions::default(),
    };
    let records = ingest_corpus(&a.corpus, &members)?;
    let records = if a.all {
        records
    } else {
        membership_filter(&records, &members)
    };
    let throttle = cal.resolve_profile(&a.throttle)?;
    if a.modes.is_empty() {
        bail!("--modes needs at least one mode");
    }

    let source: Box<dyn TraceSource> = match &a.traces {
        Some(dir) => {
            if !dir.is_dir() {
                bail!("trace directory {} does not exist", dir.display());
            }
            Box::new(ReplayDir::new(dir))
        }
        None => Box::new(LiveSource {
            endpoint: endpoint()?,
            calibration: cal.clone(),
        }),
    };
    let opts = BatchOptions {
        calibration: cal,
        throttle,
        parallelism: a.parallel,
        test_date: a.date.unwrap_or_else(|| chrono::Local::now().date_naive()),
    };
    let quiet = a.quiet;
    let results = run_batch(&records, &a.modes, source.as_ref(), &opts, &|p| {
        if !quiet {
            let state = p
                .result
                .failure_reason()
                .map_or("ok".to_string(), |r| format!("failed: {r}"));
            eprintln!(
                "[{}/{}] {} {} {}",
                p.done, p.total, p.result.site.no, p.result.mode, state
            );
        }
    });

    let file = fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_results(BufWriter::new(file), &results)?;
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    if !quiet {
        eprintln!(
            "{} audits, {} failed, results in {}",
            results.len(),
            failed,
            a.out.display()
        );
    }
    Ok(exit_for(failed))
}

fn score(cal: &Calibration, a: ScoreArgs) -> Result<ExitCode> {
    let throttle = cal.resolve_profile(&a.throttle)?;
    let raw = load_trace(&a.trace)?;
    match audit_trace(&raw, a.mode, &throttle, cal) {
        Ok((metrics, report)) => {
            print_json(&json!({"metrics": metrics, "report": report}))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("audit failed: {e}");
            Ok(ExitCode::from(EXIT_ITEM_FAILURES))
        }
    }
}

fn load_results(path: &Path) -> Result<Vec<AuditResult>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_results(BufReader::new(file)).with_context(|| path.display().to_string())
}

fn aggregate(a: AggregateArgs) -> Result<ExitCode> {
    let members = match &a.members {
        Some(path) => MemberRegions::load(path)?,
        None => MemberRegions::default(),
    };
    let results = load_results(&a.results)?;
    let aggregates = aggregate_regions(&results, &members);
    let mut text = serde_json::to_string_pretty(&aggregates)?;
    text.push('\n');
    write_output(&a.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn report(a: ReportArgs) -> Result<ExitCode> {
    let format: ReportFormat = a.format.parse()?;
    let text = fs::read_to_string(&a.aggregates).with_context(|| format!("reading {}", a.aggregates.display()))?;
    let aggregates: Vec<RegionAggregate> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.aggregates.display()))?;
    let results = match &a.results {
        Some(path) => load_results(path)?,
        None => Vec::new(),
    };
    let doc = emit_report(
        &aggregates,
        &results,
        format,
        ReportOptions {
            decimal_comma: a.decimal_comma,
        },
    )?;
    match &a.out {
        Some(path) => write_output(path, &doc)?,
        None => std::io::stdout().lock().write_all(doc.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(cal: &Calibration, a: SimulateArgs) -> Result<ExitCode> {
    let profile = cal.resolve_profile(&a.profile)?;
    let text = fs::read_to_string(&a.plan).with_context(|| format!("reading {}", a.plan.display()))?;
    let plan: Plan = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.plan.display()))?;
    let timings = simulate_waterfall(&plan, &profile)?;
    print_json(&serde_json::to_value(&timings)?)?;
    Ok(ExitCode::SUCCESS)
}
