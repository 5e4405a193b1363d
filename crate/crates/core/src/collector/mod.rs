//! Sources of normalized traces: stored trace files (replay) and an optional
//! live adapter that drives a headless browser over its debugging protocol.

mod convert;
mod live;
mod replay;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use convert::convert_trace_events;
pub use live::{capture_live, capture_raw, BrowserEndpoint, DEFAULT_SETTLE_MS, ENDPOINT_ENV};
pub use replay::{load_trace, parse_trace, write_trace, ReplayDir};

use crate::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Mobile,
    Desktop,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Mobile => "mobile",
            DeviceKind::Desktop => "desktop",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DeviceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mobile" => Ok(DeviceKind::Mobile),
            "desktop" | "web" => Ok(DeviceKind::Desktop),
            other => Err(format!("unknown device mode `{other}` (expected mobile or desktop)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceMode {
    pub kind: DeviceKind,
    pub viewport: Viewport,
    /// Task-duration scale factor applied when the trace is throttled.
    pub cpu_multiplier: f64,
}

impl DeviceMode {
    pub fn mobile() -> Self {
        Self {
            kind: DeviceKind::Mobile,
            viewport: Viewport {
                width_px: 360,
                height_px: 640,
            },
            cpu_multiplier: 4.0,
        }
    }

    pub fn desktop() -> Self {
        Self {
            kind: DeviceKind::Desktop,
            viewport: Viewport {
                width_px: 1350,
                height_px: 940,
            },
            cpu_multiplier: 1.0,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.viewport.width_px == 0 || self.viewport.height_px == 0 {
            return Err(format!("{} viewport dimensions must be > 0", self.kind));
        }
        if !self.cpu_multiplier.is_finite() || self.cpu_multiplier < 1.0 {
            return Err(format!("{} cpu_multiplier must be >= 1", self.kind));
        }
        Ok(())
    }

    pub fn user_agent(&self) -> &'static str {
        match self.kind {
            DeviceKind::Mobile => {
                "Mozilla/5.0 (Linux; Android 7.0; Moto G (4)) AppleWebKit/537.36 \
                 (KHTML, like Gecko) Chrome/76.0.3809.132 Mobile Safari/537.36"
            }
            DeviceKind::Desktop => {
                "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 \
                 (KHTML, like Gecko) Chrome/76.0.3809.132 Safari/537.36"
            }
        }
    }
}

/// The two device modes used by an audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceModes {
    pub mobile: DeviceMode,
    pub desktop: DeviceMode,
}

impl Default for DeviceModes {
    fn default() -> Self {
        Self {
            mobile: DeviceMode::mobile(),
            desktop: DeviceMode::desktop(),
        }
    }
}

impl DeviceModes {
    pub fn get(&self, kind: DeviceKind) -> &DeviceMode {
        match kind {
            DeviceKind::Mobile => &self.mobile,
            DeviceKind::Desktop => &self.desktop,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        self.mobile.check()?;
        self.desktop.check()?;
        if self.mobile.kind != DeviceKind::Mobile || self.desktop.kind != DeviceKind::Desktop {
            return Err("device mode kinds do not match their keys".into());
        }
        if self.mobile.cpu_multiplier < self.desktop.cpu_multiplier {
            return Err("mobile cpu_multiplier must be >= desktop cpu_multiplier".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRequest {
    pub url: String,
    pub mode: DeviceMode,
    pub throttle: Profile,
    pub timeout_ms: u64,
}

impl CaptureRequest {
    pub fn check(&self) -> Result<(), CollectError> {
        let rest = self
            .url
            .strip_prefix("http://")
            .or_else(|| self.url.strip_prefix("https://"));
        match rest {
            Some(host) if !host.is_empty() && !host.starts_with('/') => {}
            _ => {
                return Err(CollectError::InvalidRequest(format!(
                    "`{}` is not an absolute http(s) URL",
                    self.url
                )))
            }
        }
        if self.timeout_ms == 0 {
            return Err(CollectError::InvalidRequest("timeout_ms must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CollectError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed trace document: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: invalid trace at `{field}`: {reason}")]
    Schema {
        path: PathBuf,
        field: String,
        reason: String,
    },
    #[error("no stored trace for site {no} ({mode}) under {dir}")]
    MissingTrace { dir: PathBuf, no: u32, mode: DeviceKind },
    #[error("browser endpoint {0} is unreachable")]
    Unreachable(String),
    #[error("navigation did not finish within {0} ms")]
    NavigationTimeout(u64),
    #[error("could not convert browser trace: {0}")]
    Conversion(String),
    #[error("browser protocol error: {0}")]
    Protocol(String),
    #[error("invalid capture request: {0}")]
    InvalidRequest(String),
}
