//! Self-description of one command invocation.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::split::SplitFractions;
use super::RunError;

/// What ran, with what inputs, producing what — written to `manifest.json`
/// in the command's output directory before the work starts and finalized
/// afterwards, so a crashed or failed run still leaves a record. Together
/// with the config snapshot it carries, a manifest is enough to reproduce
/// the run's data artifacts bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Effective configuration after file and command-line overrides.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Dataset split fractions, for commands that partition data.
    pub split: Option<SplitFractions>,
    pub started_unix_s: f64,
    pub finished_unix_s: Option<f64>,
    /// Present when the run failed after the manifest was first written.
    pub error: Option<String>,
}

fn now_unix_s() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn begin(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            split: None,
            started_unix_s: now_unix_s(),
            finished_unix_s: None,
            error: None,
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(&mut self) {
        self.finished_unix_s = Some(now_unix_s());
    }

    pub fn fail(&mut self, error: String) {
        self.finished_unix_s = Some(now_unix_s());
        self.error = Some(error);
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Runs `body` between the two manifest writes: once up front with the
/// recorded paths, once with the outcome.
pub fn with_manifest(
    out_dir: &Path,
    mut manifest: RunManifest,
    body: impl FnOnce(&mut RunManifest) -> Result<(), RunError>,
) -> Result<(), RunError> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("manifest.json");
    manifest.write(&path)?;
    let result = body(&mut manifest);
    match &result {
        Ok(()) => manifest.finish(),
        Err(e) => manifest.fail(e.to_string()),
    }
    manifest.write(&path)?;
    result
}
