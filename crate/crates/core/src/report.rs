//! Report envelope and atomic file output.
//!
//! A report is a pure function of its [`RunConfig`]: the worker count and the
//! wall time are kept out of it and go to a `<out>.meta.json` sidecar, so two
//! runs of the same configuration write byte-identical reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CertError, Result};

/// Version stamp carried by every report.
pub const VERSION: &str = concat!("pinchcert v", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    /// Points drawn, summed over every sampled check in the run.
    pub samples: u64,
    pub indeterminate: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub counts: Counts,
    pub verified: bool,
    pub result: &'a T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(config: &'a RunConfig, counts: Counts, verified: bool, result: &'a T) -> Self {
        Self {
            version: VERSION,
            config,
            counts,
            verified,
            result,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CertError::InvalidArgument(format!("serializing report: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

/// Run facts that legitimately differ between identical configurations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMeta {
    pub version: &'static str,
    pub workers: usize,
    pub wall_time_seconds: f64,
}

impl RunMeta {
    pub fn new(workers: usize, wall_time: Duration) -> Self {
        Self {
            version: VERSION,
            workers,
            wall_time_seconds: wall_time.as_secs_f64(),
        }
    }
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(path.file_name().unwrap_or_default());
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
