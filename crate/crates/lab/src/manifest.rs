//! Output directories and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to reproduce a run: no timestamps, no host data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files under one root and records them for the manifest.
pub struct Artifacts {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (forward slashes) under the root.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Writes `manifest.json` and returns the recorded paths.
    pub fn finish(mut self, command: &str, cfg: &ScenarioConfig) -> Result<Vec<String>, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            config: cfg.clone(),
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(self.files.into_iter().map(|f| f.path).collect())
    }
}

/// Reads a manifest and checks every listed file against its hash.
pub fn verify(root: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(root.join(MANIFEST))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", root.join(MANIFEST).display())))?;
    for f in &manifest.files {
        let bytes = fs::read(root.join(&f.path))?;
        if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
            return Err(CliError::Numerical(format!("{} does not match its manifest entry", f.path)));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_round_trips_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::parse(r#"{"scenario": "pathological", "N": 12, "qList": ["inf"]}"#, "t").unwrap();
        let mut art = Artifacts::create(dir.path()).unwrap();
        art.write("b.csv", b"2\n").unwrap();
        art.write("sub/a.csv", b"1\n").unwrap();
        let files = art.finish("run", &cfg).unwrap();
        assert_eq!(files, vec!["b.csv", "sub/a.csv"]);
        let m = verify(dir.path()).unwrap();
        assert_eq!(m.config, cfg);
        let echoed = serde_json::to_string(&m.config).unwrap();
        assert_eq!(ScenarioConfig::parse(&echoed, "echo").unwrap(), cfg);
        fs::write(dir.path().join("b.csv"), b"3\n").unwrap();
        assert!(verify(dir.path()).is_err());
    }
}
