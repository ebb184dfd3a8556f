use std::path::{Path, PathBuf};

use anyhow::Result;
use chrono::{DateTime, Utc};
use serde::Serialize;

/// Record of one invocation, written next to its primary output as
/// `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// The fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seed: Option<u64>) -> Self {
        let now = Utc::now();
        Self {
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: serde_json::Value::Null,
            started: now,
            finished: now,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn config<T: Serialize>(mut self, config: &T) -> Result<Self> {
        self.config = serde_json::to_value(config)?;
        Ok(self)
    }

    pub fn path_for(out: &Path) -> PathBuf {
        sibling(out, "manifest.json")
    }

    /// Stamps the finish time and writes the manifest beside `out`.
    pub fn finish(mut self, out: &Path, extra_outputs: &[PathBuf]) -> Result<()> {
        self.outputs.push(out.to_path_buf());
        self.outputs.extend_from_slice(extra_outputs);
        self.finished = Utc::now();
        dapamt::io::write_json(&Self::path_for(out), &self)?;
        Ok(())
    }
}

/// `<out>.<suffix>`, keeping the original extension in the name.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}
