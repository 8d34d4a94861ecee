//! Run manifests: every command that writes data artifacts also writes a
//! `manifest.json` alongside them recording the fully resolved
//! configuration, the seed, component versions, the artifact list, and the
//! wall-clock time.
//!
//! A manifest is replayable: passing it as `--config` re-runs the command
//! from the embedded `config_text` and reproduces the data artifacts byte
//! for byte (timing, being wall-clock, is the one field that differs).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    /// The subcommand that produced this run.
    pub command: String,
    /// Fully resolved flat configuration (defaults filled in, numbers at
    /// 17 significant digits).  Parsing this text reproduces the run.
    pub config_text: String,
    /// Random seed, when the command consumes one.
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    /// Data artifacts written next to this manifest, in creation order.
    pub artifacts: Vec<String>,
    /// Wall-clock runtime; informational only, varies between runs.
    pub timing_seconds: f64,
    /// Command-specific side information (validation reports, counts).
    #[serde(skip_serializing_if = "serde_json::Value::is_null", default)]
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config_text: String, seed: Option<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("cyclm".to_string(), cyclm::VERSION.to_string());
        versions.insert("cyclm-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Manifest {
            command: command.to_string(),
            config_text,
            seed,
            versions,
            artifacts: Vec::new(),
            timing_seconds: 0.0,
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::runtime(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        crate::csvio::write_text(&dir.join("manifest.json"), &text)
    }
}

/// Load the configuration text for a command.  The path may point at either
/// a flat config file or a previously written manifest (detected by a
/// leading '{'); in the latter case the embedded resolved config is
/// extracted, after checking that the manifest belongs to this command.
pub fn load_config_text(path: &Path, command: &str) -> Result<String, CliError> {
    let text = crate::csvio::read_text(path)?;
    if !text.trim_start().starts_with('{') {
        return Ok(text);
    }
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| {
        CliError::config(format!(
            "{} looks like JSON but does not parse as a run manifest: {e}",
            path.display()
        ))
    })?;
    if manifest.command != command {
        return Err(CliError::config(format!(
            "manifest {} was produced by the {:?} command, not {command:?}",
            path.display(),
            manifest.command
        )));
    }
    Ok(manifest.config_text)
}
