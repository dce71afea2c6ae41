use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub files: Vec<FileEntry>,
}

/// SHA-256 of the config serialized with sorted keys, so key order in the
/// source file does not matter. The output directory is left out: the same
/// experiment written elsewhere hashes the same.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, CliError> {
    // serde_json::Value keeps object keys sorted
    let mut value = serde_json::to_value(config).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(map) = value.as_object_mut() {
        map.remove("out");
    }
    let canonical = serde_json::to_string(&value).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, started: String, dir: &Path, names: &[String]) -> Result<Self, CliError> {
        let mut files = Vec::with_capacity(names.len());
        for name in names {
            let path = dir.join(name);
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            files.push(FileEntry {
                name: name.clone(),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        Ok(Self {
            command: command.to_string(),
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: now(),
            files,
        })
    }
}
