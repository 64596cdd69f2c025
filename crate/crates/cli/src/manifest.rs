//! Run manifests: a JSON record of what a command did, written into every
//! output directory.
//!
//! The manifest holds the command name, every resolved parameter (including
//! the seed), SHA-256 digests of every input file, deterministic result
//! summaries, and wall-clock timing. Re-running the recorded command line
//! reproduces all CSV outputs byte-identically; the `timing` section is the
//! one part that legitimately varies between runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fail::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Every parameter after defaulting, keyed by flag name.
    pub parameters: serde_json::Value,
    /// SHA-256 digest of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    /// Deterministic summary quantities of the run.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub results: serde_json::Value,
    /// Wall-clock measurements; informational only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_second: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &'static str, parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: "cutset",
            version: env!("CARGO_PKG_VERSION"),
            command,
            parameters,
            inputs: BTreeMap::new(),
            results: serde_json::Value::Null,
            timing: None,
        }
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Serializes the manifest as `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_text(&dir.join("manifest.json"), &text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes a text file (creating parent directories), ensuring it ends with
/// exactly one newline.
pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Input(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    let mut text = contents.trim_end_matches('\n').to_string();
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
