//! Page-load metrics read off a normalized trace.
//!
//! Every operation is a pure function of the trace. Times are milliseconds
//! since navigation start.

mod metrics;
mod trace;

pub use metrics::{
    compute_all, compute_all_with, compute_fci, compute_fci_with, compute_fcp, compute_fmp, compute_max_fid,
    compute_speed_index, compute_tti, compute_tti_with, MetricError, MetricSet, QuietWindow,
};
pub use trace::{InvalidTrace, NormalizedTrace, PaintEvent, PaintKind, Request, Task, VisualSample};
