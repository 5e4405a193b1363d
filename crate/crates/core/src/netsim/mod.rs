//! Simulated network throttling and CPU slowdown.
//!
//! The downlink is modeled as a single processor-sharing link: all transfers
//! in flight split the capacity equally. No TCP slow start, no connection
//! limits, one round trip charged per request.

mod profile;
mod throttle;
mod waterfall;

pub use profile::ThrottleProfile;
pub use throttle::apply_throttle;
pub use waterfall::{simulate_waterfall, PlannedRequest, SimulatedRequest, WaterfallPlan};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetsimError {
    #[error("request dependency cycle through request {0}")]
    CyclicPlan(u64),
    #[error("request {id} references unknown parent {parent_id}")]
    UnknownParent { id: u64, parent_id: u64 },
    #[error("duplicate request id {0}")]
    DuplicateId(u64),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid throttle profile: {0}")]
    InvalidProfile(String),
}
