//! Region aggregates, ranking and report rendering.

mod aggregate;
mod render;

pub use aggregate::{aggregate_regions, overall_average, rank_regions, OverallAverage, RankMode, RegionAggregate};
pub use render::{
    emit_report, parse_report_csv, parse_report_json, ChartPoint, ReportDocument, ReportFormat, ReportOptions,
    SiteEntry,
};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected csv, md or json)")]
    UnknownFormat(String),
    #[error("rendering failed: {0}")]
    Render(String),
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
}
