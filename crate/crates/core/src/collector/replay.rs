use std::fs;
use std::path::{Path, PathBuf};

use serde_json::error::Category;

use super::{CollectError, DeviceKind};
use crate::Trace;

/// Parses and validates a trace document. `path` is only used in errors.
pub fn parse_trace(text: &str, path: &Path) -> Result<Trace, CollectError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let trace: Trace = match serde_path_to_error::deserialize(&mut de) {
        Ok(t) => t,
        Err(err) => {
            let field = err.path().to_string();
            let inner = err.into_inner();
            return Err(match inner.classify() {
                Category::Data => CollectError::Schema {
                    path: path.to_path_buf(),
                    field,
                    reason: inner.to_string(),
                },
                _ => CollectError::Parse {
                    path: path.to_path_buf(),
                    message: inner.to_string(),
                },
            });
        }
    };
    de.end().map_err(|e| CollectError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    trace.validated().map_err(|e| CollectError::Schema {
        path: path.to_path_buf(),
        field: e.path,
        reason: e.reason,
    })
}

/// Reads a stored trace file.
pub fn load_trace(path: &Path) -> Result<Trace, CollectError> {
    let text = fs::read_to_string(path).map_err(|source| CollectError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace(&text, path)
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), CollectError> {
    let mut text = serde_json::to_string_pretty(trace).expect("trace serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| CollectError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Directory of stored traces keyed by corpus number.
///
/// For site `no` in mode `m` the file `<no>.<m>.json` is preferred, falling
/// back to the mode-independent recording `<no>.json`.
#[derive(Debug, Clone)]
pub struct ReplayDir {
    root: PathBuf,
}

impl ReplayDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn candidates(&self, no: u32, mode: DeviceKind) -> [PathBuf; 2] {
        [
            self.root.join(format!("{no}.{mode}.json")),
            self.root.join(format!("{no}.json")),
        ]
    }

    pub fn load(&self, no: u32, mode: DeviceKind) -> Result<Trace, CollectError> {
        for path in self.candidates(no, mode) {
            if path.is_file() {
                return load_trace(&path);
            }
        }
        Err(CollectError::MissingTrace {
            dir: self.root.clone(),
            no,
            mode,
        })
    }
}
