use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Kind of a paint event on the page-load timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaintKind {
    FirstPaint,
    ContentfulPaint,
    FmpCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintEvent<T> {
    pub t_ms: T,
    pub kind: PaintKind,
    /// Layout significance; only meaningful for [`PaintKind::FmpCandidate`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<T>,
}

/// A main-thread task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task<T> {
    pub start_ms: T,
    pub dur_ms: T,
}

impl<T: Scalar> Task<T> {
    pub fn end_ms(&self) -> T {
        self.start_ms + self.dur_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request<T> {
    pub discovered_ms: T,
    pub start_ms: T,
    pub end_ms: T,
    pub bytes: u64,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualSample<T> {
    pub t_ms: T,
    pub fraction: T,
}

/// A recorded page-load timeline. All times are milliseconds relative to
/// navigation start, which is always `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrace<T> {
    pub nav_start: T,
    #[serde(default)]
    pub paint_events: Vec<PaintEvent<T>>,
    #[serde(default)]
    pub tasks: Vec<Task<T>>,
    #[serde(default)]
    pub requests: Vec<Request<T>>,
    #[serde(default)]
    pub visual_progress: Vec<VisualSample<T>>,
}

impl<T: Scalar> Default for NormalizedTrace<T> {
    fn default() -> Self {
        Self {
            nav_start: T::zero(),
            paint_events: Vec::new(),
            tasks: Vec::new(),
            requests: Vec::new(),
            visual_progress: Vec::new(),
        }
    }
}

/// A trace invariant that cannot be repaired.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {reason}")]
pub struct InvalidTrace {
    /// Field path such as `requests[2].end_ms`.
    pub path: String,
    pub reason: String,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> InvalidTrace {
    InvalidTrace {
        path: path.into(),
        reason: reason.into(),
    }
}

fn check_time<T: Scalar>(v: T, path: impl FnOnce() -> String) -> Result<(), InvalidTrace> {
    if !v.is_finite() {
        return Err(invalid(path(), "must be a finite number"));
    }
    if v < T::zero() {
        return Err(invalid(path(), "must be >= 0"));
    }
    Ok(())
}

impl<T: Scalar> NormalizedTrace<T> {
    /// Checks every invariant, repairing the ones that have a documented
    /// repair (visual-progress regressions are clamped to the running
    /// maximum) and rejecting everything else.
    pub fn validated(mut self) -> Result<Self, InvalidTrace> {
        if self.nav_start != T::zero() {
            return Err(invalid("nav_start", "must be 0"));
        }

        for (i, p) in self.paint_events.iter().enumerate() {
            check_time(p.t_ms, || format!("paint_events[{i}].t_ms"))?;
            match (p.kind, p.significance) {
                (PaintKind::FmpCandidate, None) => {
                    return Err(invalid(
                        format!("paint_events[{i}].significance"),
                        "required for fmp-candidate",
                    ))
                }
                (_, Some(s)) => check_time(s, || format!("paint_events[{i}].significance"))?,
                _ => {}
            }
        }

        let mut prev_end: Option<T> = None;
        for (i, task) in self.tasks.iter().enumerate() {
            check_time(task.start_ms, || format!("tasks[{i}].start_ms"))?;
            if !task.dur_ms.is_finite() || task.dur_ms <= T::zero() {
                return Err(invalid(format!("tasks[{i}].dur_ms"), "must be > 0"));
            }
            if let Some(end) = prev_end {
                if task.start_ms < end {
                    return Err(invalid(
                        format!("tasks[{i}].start_ms"),
                        "tasks must be sorted and must not overlap",
                    ));
                }
            }
            prev_end = Some(task.end_ms());
        }

        for (i, r) in self.requests.iter().enumerate() {
            check_time(r.discovered_ms, || format!("requests[{i}].discovered_ms"))?;
            check_time(r.start_ms, || format!("requests[{i}].start_ms"))?;
            check_time(r.end_ms, || format!("requests[{i}].end_ms"))?;
            if r.start_ms < r.discovered_ms {
                return Err(invalid(
                    format!("requests[{i}].start_ms"),
                    "start_ms precedes discovered_ms",
                ));
            }
            if r.end_ms < r.start_ms {
                return Err(invalid(format!("requests[{i}].end_ms"), "end_ms precedes start_ms"));
            }
        }

        let mut prev_t: Option<T> = None;
        let mut running = T::zero();
        for (i, s) in self.visual_progress.iter_mut().enumerate() {
            check_time(s.t_ms, || format!("visual_progress[{i}].t_ms"))?;
            if let Some(t) = prev_t {
                if s.t_ms < t {
                    return Err(invalid(
                        format!("visual_progress[{i}].t_ms"),
                        "samples must be sorted by t_ms",
                    ));
                }
            }
            prev_t = Some(s.t_ms);
            if !s.fraction.is_finite() || s.fraction < T::zero() || s.fraction > T::one() {
                return Err(invalid(
                    format!("visual_progress[{i}].fraction"),
                    "must be within [0, 1]",
                ));
            }
            // reflow regressions
            if s.fraction < running {
                s.fraction = running;
            }
            running = s.fraction;
        }

        Ok(self)
    }

    /// Latest timestamp mentioned anywhere in the trace.
    pub fn end_ms(&self) -> T {
        let paints = self.paint_events.iter().map(|p| p.t_ms);
        let tasks = self.tasks.iter().map(Task::end_ms);
        let reqs = self.requests.iter().map(|r| r.end_ms);
        let visual = self.visual_progress.iter().map(|v| v.t_ms);
        paints.chain(tasks).chain(reqs).chain(visual).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(d: f64, s: f64, e: f64) -> Request<f64> {
        Request {
            discovered_ms: d,
            start_ms: s,
            end_ms: e,
            bytes: 1000,
            origin: "a.test".into(),
        }
    }

    #[test]
    fn request_end_before_start_names_index() {
        let trace = NormalizedTrace {
            requests: vec![req(0.0, 0.0, 10.0), req(5.0, 20.0, 15.0)],
            ..Default::default()
        };
        let err = trace.validated().unwrap_err();
        assert_eq!(err.path, "requests[1].end_ms");
    }

    #[test]
    fn visual_regression_is_clamped() {
        let trace = NormalizedTrace {
            visual_progress: vec![
                VisualSample {
                    t_ms: 100.0,
                    fraction: 0.6,
                },
                VisualSample {
                    t_ms: 200.0,
                    fraction: 0.4,
                },
                VisualSample {
                    t_ms: 300.0,
                    fraction: 1.0,
                },
            ],
            ..Default::default()
        };
        let t = trace.validated().unwrap();
        let fr: Vec<f64> = t.visual_progress.iter().map(|v| v.fraction).collect();
        assert_eq!(fr, vec![0.6, 0.6, 1.0]);
    }

    #[test]
    fn overlapping_tasks_rejected() {
        let trace = NormalizedTrace {
            tasks: vec![
                Task {
                    start_ms: 0.0,
                    dur_ms: 100.0,
                },
                Task {
                    start_ms: 50.0,
                    dur_ms: 10.0,
                },
            ],
            ..Default::default()
        };
        assert_eq!(trace.validated().unwrap_err().path, "tasks[1].start_ms");
    }

    #[test]
    fn nonzero_nav_start_rejected() {
        let trace = NormalizedTrace::<f64> {
            nav_start: 3.0,
            ..Default::default()
        };
        assert!(trace.validated().is_err());
    }

    #[test]
    fn fmp_candidate_needs_significance() {
        let trace = NormalizedTrace {
            paint_events: vec![PaintEvent {
                t_ms: 10.0,
                kind: PaintKind::FmpCandidate,
                significance: None,
            }],
            ..Default::default()
        };
        assert_eq!(trace.validated().unwrap_err().path, "paint_events[0].significance");
    }
}
