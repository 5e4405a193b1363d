//! Site inventory, smart-city membership and batch audits.

mod batch;
mod site;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use batch::{
    audit_trace, read_results, results_to_string, run_batch, write_results, AuditError, AuditResult, AuditStatus,
    BatchOptions, LiveSource, Progress, TraceSource,
};
pub use site::{
    ingest_corpus, membership_filter, normalize_region, read_corpus, MemberRegions, SiteRecord, Tier, DEFAULT_MEMBERS,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}, column `{column}`: {message}")]
    Csv { line: u64, column: String, message: String },
    #[error("corpus line {line}: duplicate url {url}")]
    DuplicateUrl { line: u64, url: String },
    #[error("member-region list is empty")]
    EmptyMembers,
    #[error("results line {line}: {message}")]
    Results { line: u64, message: String },
}

/// Scores at or beyond these bounds are queued for manual validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierThresholds {
    pub upper: f64,
    pub lower: f64,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        Self {
            upper: 95.0,
            lower: 5.0,
        }
    }
}

impl OutlierThresholds {
    pub fn is_outlier(&self, score: f64) -> bool {
        score >= self.upper || score <= self.lower
    }
}

/// True when an ok result's score sits near either end of the scale. Failed
/// results are never flagged.
pub fn flag_outliers(result: &AuditResult, thresholds: &OutlierThresholds) -> bool {
    result.performance_score().is_some_and(|s| thresholds.is_outlier(s))
}
