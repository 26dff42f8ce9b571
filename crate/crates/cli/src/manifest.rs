//! Run manifest: input hashes, seed, versions and per-stage records. Stage
//! keys hash everything a stage reads, so an unchanged key with intact
//! outputs is a cache hit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Cached,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub key: String,
    pub status: StageStatus,
    pub seconds: f64,
    /// Output path to sha256; absent outputs of a failed stage are omitted.
    pub outputs: BTreeMap<PathBuf, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub core_version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: BTreeMap<PathBuf, String>,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn new(seed: u64, config_sha256: String) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: trait_core::VERSION.to_string(),
            seed,
            config_sha256,
            inputs: BTreeMap::new(),
            stages: Vec::new(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_parts<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// True when every recorded output still exists with the recorded hash.
pub fn outputs_intact(record: &StageRecord) -> bool {
    !record.outputs.is_empty()
        && record
            .outputs
            .iter()
            .all(|(p, h)| sha256_file(p).map(|x| &x == h).unwrap_or(false))
}
