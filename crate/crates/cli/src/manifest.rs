//! Run manifests, written last as the completion marker of a command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub summary: Vec<BTreeMap<String, serde_json::Value>>,
    pub completed_unix_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("etc-bench".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("etc-core".into(), etc_core::VERSION.into());
        RunManifest {
            command: command.into(),
            config,
            seeds,
            versions,
            outputs: Vec::new(),
            summary: Vec::new(),
            completed_unix_ms: 0,
        }
    }

    pub fn output(&mut self, rel: impl Into<String>) {
        self.outputs.push(rel.into());
    }

    pub fn summary_row(&mut self, row: BTreeMap<String, serde_json::Value>) {
        self.summary.push(row);
    }

    /// Checks that every listed output exists, then writes the manifest via
    /// a temporary file and a rename.
    pub fn write(mut self, out_dir: &Path) -> Result<PathBuf> {
        for rel in &self.outputs {
            if !out_dir.join(rel).exists() {
                bail!("manifest output {rel} was not written");
            }
        }
        self.completed_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let path = out_dir.join(MANIFEST_NAME);
        let tmp = out_dir.join(format!("{MANIFEST_NAME}.tmp"));
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        std::fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// Shorthand for building summary rows.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = std::collections::BTreeMap::new();
        $( m.insert($k.to_string(), serde_json::json!($v)); )*
        m
    }};
}
