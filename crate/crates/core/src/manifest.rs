//! Run manifests: one JSON document per training or evaluation run tying its
//! artifacts to the configuration, seeds and inputs that produced them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::write_atomic;
use crate::env::LevelSpec;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed {
        reason: String,
        last_checkpoint: Option<String>,
    },
}

/// Identity of the opponent a run was paired with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpponentIdentity {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub level: LevelSpec,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<OpponentIdentity>,
    pub started_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
    pub status: RunStatus,
    /// Paths relative to the manifest's directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    /// Free-form labels such as `victim_id` or the sampling mode.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(
        command: impl Into<String>,
        config: serde_json::Value,
        level: LevelSpec,
        seeds: Vec<u64>,
    ) -> Self {
        RunManifest {
            command: command.into(),
            config,
            level,
            seeds,
            opponent: None,
            started_at: now_rfc3339(),
            finished_at: None,
            status: RunStatus::Running,
            artifacts: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            labels: BTreeMap::new(),
        }
    }

    pub fn label(mut self, key: &str, value: impl Into<String>) -> Self {
        self.labels.insert(key.to_string(), value.into());
        self
    }

    pub fn finish(&mut self, status: RunStatus) {
        self.status = status;
        self.finished_at = Some(now_rfc3339());
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::format(format!("manifest {}", path.display()), e))
    }
}

/// Pretty JSON for configs and other small documents.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write_atomic(path, text.as_bytes())
}
