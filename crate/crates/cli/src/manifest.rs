use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::commands::CliError;

/// Record written next to a command's outputs. `args` plus `seed` re-run it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub version: String,
    pub duration_secs: f64,
    pub outputs: Vec<String>,
    /// Resolved settings, including defaults that were not on the command line.
    pub parameters: BTreeMap<String, String>,
}

pub struct ManifestBuilder {
    command: &'static str,
    args: Vec<String>,
    config: Option<PathBuf>,
    seed: u64,
    jobs: Option<usize>,
    started: Instant,
    outputs: Vec<PathBuf>,
    parameters: BTreeMap<String, String>,
}

impl ManifestBuilder {
    pub fn new(command: &'static str, argv: &[String], seed: u64, jobs: Option<usize>) -> Self {
        Self {
            command,
            args: argv.iter().skip(1).cloned().collect(),
            config: None,
            seed,
            jobs,
            started: Instant::now(),
            outputs: Vec::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn config(&mut self, path: &Path) {
        self.config = Some(path.to_path_buf());
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Checks every output exists, then writes `<anchor>.manifest.toml`.
    pub fn finish(self, anchor: &Path) -> Result<PathBuf, CliError> {
        for p in &self.outputs {
            if !p.is_file() {
                return Err(CliError::io(format!("output {} was not written", p.display())));
            }
        }
        let path = manifest_path(anchor);
        let manifest = RunManifest {
            command: self.command.to_string(),
            args: self.args,
            config: self.config.map(|p| p.display().to_string()),
            seed: self.seed,
            jobs: self.jobs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            parameters: self.parameters,
        };
        let text = toml::to_string(&manifest)
            .map_err(|e| CliError::io(format!("cannot encode manifest: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn manifest_path(anchor: &Path) -> PathBuf {
    let mut name = anchor.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.toml");
    anchor.with_file_name(name)
}
