//! Run manifests: what was run, with which toolkit, and what it wrote.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical spec text.
    pub spec_hash: String,
    pub toolkit_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, canonical_spec: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            spec_hash: spec_hash(canonical_spec),
            toolkit_version: crate::VERSION.to_string(),
            seed,
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn spec_hash(canonical_spec: &str) -> String {
    hex::encode(Sha256::digest(canonical_spec.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            spec_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_ne!(spec_hash("seed = 1"), spec_hash("seed = 2"));
    }

    #[test]
    fn writes_json() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("run", "task = 1", 7);
        m.outputs.push("report.json".into());
        m.write(dir.path()).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["outputs"][0], "report.json");
        assert_eq!(v["toolkit_version"], crate::VERSION);
    }
}
