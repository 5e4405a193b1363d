//! Page-load performance auditing.
//!
//! * [`trace_metrics`] reads six load metrics off a normalized trace.
//! * [`scoring`] maps them to 0–100 scores and a weighted performance score.
//! * [`netsim`] re-times a recorded trace under simulated network and CPU
//!   throttling.
//! * [`collector`] loads stored traces or captures live ones.
//! * [`corpus`] ingests a site inventory and runs batch audits.
//! * [`reporting`] aggregates per region, ranks, and renders reports.
//!
//! The numeric modules are generic over [`Scalar`]; the aliases below fix the
//! scalar to `f64`, which is what the file formats and the CLI use.

pub mod collector;
pub mod config;
pub mod corpus;
pub mod netsim;
pub mod reporting;
pub mod scalar;
pub mod scoring;
pub mod trace_metrics;

pub use scalar::Scalar;

pub type Trace = trace_metrics::NormalizedTrace<f64>;
pub type Metrics = trace_metrics::MetricSet<f64>;
pub type Curve = scoring::ScoreCurve<f64>;
pub type Report = scoring::ScoreReport<f64>;
pub type Profile = netsim::ThrottleProfile<f64>;
pub type Plan = netsim::WaterfallPlan<f64>;

pub type TraceF32 = trace_metrics::NormalizedTrace<f32>;
pub type MetricsF32 = trace_metrics::MetricSet<f32>;
pub type CurveF32 = scoring::ScoreCurve<f32>;
pub type ProfileF32 = netsim::ThrottleProfile<f32>;
