//! The calibration / configuration file.
//!
//! One JSON document carries everything that is tuning rather than logic:
//! category weights, one scoring curve per metric per device mode, category
//! bands, named throttle profiles, device-mode emulation settings, outlier
//! thresholds and the quiet-window parameters. The shipped defaults live in
//! `data/calibration.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collector::{DeviceKind, DeviceModes};
use crate::corpus::OutlierThresholds;
use crate::scoring::{CategoryBands, PerMetric, WeightTable};
use crate::trace_metrics::QuietWindow;
use crate::{Curve, Profile};

pub const DEFAULT_CALIBRATION: &str = include_str!("../data/calibration.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCurves {
    pub mobile: PerMetric<Curve>,
    pub desktop: PerMetric<Curve>,
}

impl ModeCurves {
    pub fn get(&self, kind: DeviceKind) -> &PerMetric<Curve> {
        match kind {
            DeviceKind::Mobile => &self.mobile,
            DeviceKind::Desktop => &self.desktop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: String,
    #[serde(default)]
    pub weights: WeightTable,
    pub curves: ModeCurves,
    #[serde(default)]
    pub categories: CategoryBands,
    #[serde(default)]
    pub throttle_profiles: BTreeMap<String, Profile>,
    #[serde(default)]
    pub modes: DeviceModes,
    #[serde(default)]
    pub outliers: OutlierThresholds,
    #[serde(default)]
    pub quiet_window: QuietWindow<f64>,
    #[serde(default = "default_timeout")]
    pub navigation_timeout_ms: u64,
}

fn default_timeout() -> u64 {
    60_000
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid calibration: {0}")]
    Invalid(String),
    #[error("unknown throttle profile `{0}` (not a configured name or a readable file)")]
    UnknownProfile(String),
}

impl Default for Calibration {
    fn default() -> Self {
        Self::parse(DEFAULT_CALIBRATION, "<built-in calibration>").expect("built-in calibration is valid")
    }
}

impl Calibration {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cal: Calibration = serde_path_to_error::deserialize(&mut de).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })?;
        cal.check()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        for kind in [DeviceKind::Mobile, DeviceKind::Desktop] {
            for (key, curve) in self.curves.get(kind).iter() {
                curve
                    .check()
                    .map_err(|e| ConfigError::Invalid(format!("{kind} {key}: {e}")))?;
            }
        }
        for (name, p) in &self.throttle_profiles {
            p.check()
                .map_err(|e| ConfigError::Invalid(format!("profile {name}: {e}")))?;
        }
        self.modes.check().map_err(ConfigError::Invalid)?;
        let b = &self.categories;
        if !(0.0..=100.0).contains(&b.average) || !(b.average..=100.0).contains(&b.good) {
            return Err(ConfigError::Invalid(
                "category bands must satisfy 0 <= average <= good <= 100".into(),
            ));
        }
        let o = &self.outliers;
        if o.lower.is_nan() || o.upper.is_nan() || o.lower >= o.upper {
            return Err(ConfigError::Invalid(
                "outlier lower threshold must be below upper".into(),
            ));
        }
        let q = &self.quiet_window;
        if q.window_ms.is_nan() || q.window_ms <= 0.0 || q.long_task_ms.is_nan() || q.long_task_ms < 0.0 {
            return Err(ConfigError::Invalid("quiet window parameters must be positive".into()));
        }
        if self.navigation_timeout_ms == 0 {
            return Err(ConfigError::Invalid("navigation_timeout_ms must be > 0".into()));
        }
        Ok(())
    }

    /// Resolves a profile name from the file, or else reads a profile JSON
    /// file at that path.
    pub fn resolve_profile(&self, name_or_path: &str) -> Result<Profile, ConfigError> {
        if let Some(p) = self.throttle_profiles.get(name_or_path) {
            return Ok(*p);
        }
        let path = Path::new(name_or_path);
        if !path.is_file() {
            return Err(ConfigError::UnknownProfile(name_or_path.to_string()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: name_or_path.to_string(),
            source,
        })?;
        let p: Profile = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: name_or_path.to_string(),
            message: e.to_string(),
        })?;
        p.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }
}
