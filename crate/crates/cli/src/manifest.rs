//! Provenance manifest: every artifact with its content hash and the
//! artifacts it was derived from.

use anyhow::{Context, Result};
use scribe_core::container::file_sha256;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: String,
    pub sha256: String,
    /// Paths (relative to the output directory) of the inputs.
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub artifacts: BTreeMap<String, Artifact>,
}

impl Manifest {
    pub fn new(config_sha256: &str) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_sha256.to_string(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Load the manifest in `dir`, or start a new one if there is none or
    /// it was produced under a different configuration.
    pub fn open(dir: &Path, config_sha256: &str) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::new(config_sha256));
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.config_sha256 != config_sha256 {
            log::info!("configuration changed; starting a fresh manifest");
            return Ok(Self::new(config_sha256));
        }
        Ok(m)
    }

    /// Hash `rel` (relative to `dir`) and record it.
    pub fn record(&mut self, dir: &Path, rel: &Path, kind: &str, inputs: &[PathBuf]) -> Result<()> {
        let sha256 = file_sha256(&dir.join(rel))?;
        self.artifacts.insert(
            key(rel),
            Artifact {
                kind: kind.to_string(),
                sha256,
                inputs: inputs.iter().map(|p| key(p)).collect(),
            },
        );
        Ok(())
    }

    /// Inputs listed for any artifact but missing from the manifest.
    pub fn dangling_inputs(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .artifacts
            .values()
            .flat_map(|a| a.inputs.iter())
            .filter(|i| *i != "config" && !self.artifacts.contains_key(*i))
            .cloned()
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

fn key(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_hashes_and_inputs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.bin"), b"abc").unwrap();
        std::fs::write(dir.path().join("b.bin"), b"def").unwrap();
        let mut m = Manifest::new("cfg");
        m.record(dir.path(), Path::new("a.bin"), "episode", &[PathBuf::from("config")]).unwrap();
        m.record(dir.path(), Path::new("b.bin"), "dataset", &[PathBuf::from("a.bin")]).unwrap();
        assert_eq!(
            m.artifacts["a.bin"].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.dangling_inputs().is_empty());
        m.write(dir.path()).unwrap();
        assert_eq!(Manifest::open(dir.path(), "cfg").unwrap(), m);
        assert!(Manifest::open(dir.path(), "other").unwrap().artifacts.is_empty());
    }
}
