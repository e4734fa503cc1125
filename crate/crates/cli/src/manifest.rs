use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Sidecar written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Every flag, defaults included.
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Values chosen by this tool where the method leaves them open.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub assumptions: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects manifest fields while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn start(command: &str, flags: &impl Serialize, seed: Option<u64>) -> anyhow::Result<Self> {
        Ok(Self {
            manifest: RunManifest {
                schema_version: MANIFEST_SCHEMA_VERSION,
                tool: env!("CARGO_PKG_NAME").into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                flags: serde_json::to_value(flags)?,
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                assumptions: serde_json::Map::new(),
                extra: serde_json::Map::new(),
                started_at: timestamp(Utc::now()),
                finished_at: String::new(),
            },
        })
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.manifest.inputs.push(path.into());
        self
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.manifest.outputs.push(path.into());
        self
    }

    pub fn assume(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.manifest
            .assumptions
            .insert(key.into(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn extra(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.manifest
            .extra
            .insert(key.into(), serde_json::to_value(value).expect("serializable"));
        self
    }

    /// Stamps the finish time and writes one manifest beside each output.
    pub fn finish(mut self) -> anyhow::Result<RunManifest> {
        self.manifest.finished_at = timestamp(Utc::now());
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        for out in &self.manifest.outputs {
            let path = manifest_path(out);
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(manifest_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.manifest.json"));
        assert_eq!(manifest_path(Path::new("model.json")), PathBuf::from("model.json.manifest.json"));
    }
}
