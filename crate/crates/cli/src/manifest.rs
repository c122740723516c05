use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputEntry {
    pub fn describe(file: &str, contents: &[u8]) -> Self {
        Self { file: file.to_string(), bytes: contents.len(), sha256: hex::encode(Sha256::digest(contents)) }
    }
}

/// Record of one run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    pub harness_version: String,
    /// Configuration after defaults and overrides were applied.
    pub config: serde_json::Value,
    pub threads: usize,
    pub started_unix_secs: u64,
    pub duration_secs: f64,
    pub not_converged: usize,
    pub outputs: Vec<OutputEntry>,
}
