//! Output directory with a digest manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const TOOL: &str = "old";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Wall-clock seconds; recorded only with `--timings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    /// Path relative to the output directory -> sha256 hex digest.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            config: serde_json::Value::Null,
            stages: BTreeMap::new(),
        }
    }
}

pub struct ArtifactStore {
    root: PathBuf,
    force: bool,
    pub manifest: RunManifest,
}

impl ArtifactStore {
    /// Opens `root`, loading an existing manifest if there is one.
    pub fn open(root: &Path, force: bool) -> Result<Self, CliError> {
        let path = root.join(MANIFEST);
        let manifest = if path.exists() {
            let text = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            serde_json::from_slice(&text)
                .map_err(|e| CliError::Validation(format!("{}: corrupt manifest: {e}", path.display())))?
        } else {
            RunManifest::default()
        };
        Ok(ArtifactStore {
            root: root.to_owned(),
            force,
            manifest,
        })
    }

    /// Loads an existing manifest; errors when the directory has none.
    pub fn open_existing(root: &Path, force: bool) -> Result<Self, CliError> {
        if !root.join(MANIFEST).exists() {
            return Err(CliError::Io(format!(
                "no {MANIFEST} in {}: run a pipeline stage first",
                root.display()
            )));
        }
        Self::open(root, force)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Forgets the stage's previous inventory and records the config echo.
    pub fn begin_stage(&mut self, stage: &str, config: serde_json::Value) -> Result<(), CliError> {
        self.manifest.config = config;
        self.manifest.stages.remove(stage);
        self.save()
    }

    /// Writes an artifact, refusing to replace a differing file unless forced.
    pub fn put(&mut self, stage: &str, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(rel);
        if let Ok(existing) = fs::read(&path) {
            if existing != bytes && !self.force {
                return Err(CliError::Overwrite(path.display().to_string()));
            }
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest
            .stages
            .entry(stage.to_owned())
            .or_default()
            .files
            .insert(rel.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    pub fn finish_stage(&mut self, stage: &str, seconds: Option<f64>) -> Result<(), CliError> {
        let record = self.manifest.stages.entry(stage.to_owned()).or_default();
        record.seconds = seconds;
        self.save()
    }

    /// True when some stage lists `rel`.
    pub fn has(&self, rel: &str) -> bool {
        self.manifest.stages.values().any(|s| s.files.contains_key(rel))
    }

    /// Reads an artifact produced by `stage`; the error says which stage to run.
    pub fn read(&self, rel: &str, stage: &str) -> Result<Vec<u8>, CliError> {
        if !self.has(rel) {
            return Err(CliError::Io(format!(
                "missing artifact {}: run `old {stage}` first",
                self.path(rel).display()
            )));
        }
        let path = self.path(rel);
        fs::read(&path).map_err(|e| CliError::io(&path, e))
    }

    /// Files whose current contents no longer match the manifest.
    pub fn verify(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for record in self.manifest.stages.values() {
            for (rel, digest) in &record.files {
                match fs::read(self.path(rel)) {
                    Ok(bytes) if &sha256_hex(&bytes) == digest => {}
                    _ => bad.push(rel.clone()),
                }
            }
        }
        bad
    }

    pub fn save(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        let mut text = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        text.push(b'\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn overwrite_rules() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArtifactStore::open(dir.path(), false).unwrap();
        s.begin_stage("x", serde_json::Value::Null).unwrap();
        s.put("x", "a/b.txt", b"one").unwrap();
        s.put("x", "a/b.txt", b"one").unwrap();
        assert!(matches!(s.put("x", "a/b.txt", b"two"), Err(CliError::Overwrite(_))));
        s.finish_stage("x", None).unwrap();

        let mut forced = ArtifactStore::open(dir.path(), true).unwrap();
        assert!(forced.has("a/b.txt"));
        forced.put("x", "a/b.txt", b"two").unwrap();
        assert!(forced.verify().is_empty());
        fs::write(dir.path().join("a/b.txt"), b"three").unwrap();
        assert_eq!(forced.verify(), vec!["a/b.txt".to_string()]);
    }

    #[test]
    fn begin_clears_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArtifactStore::open(dir.path(), false).unwrap();
        s.put("x", "f", b"1").unwrap();
        s.finish_stage("x", None).unwrap();
        s.begin_stage("x", serde_json::Value::Null).unwrap();
        assert!(!s.has("f"));
        let err = s.read("f", "x").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("run `old x` first"));
    }

    #[test]
    fn report_needs_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ArtifactStore::open_existing(dir.path(), false).is_err());
    }
}
