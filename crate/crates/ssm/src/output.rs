//! Staged output directory and run manifest.
//!
//! Artifacts are collected in memory, written to a temporary sibling of the
//! target directory and moved into place only once everything succeeded, so
//! a failed run leaves no partial output behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{AppError, Category, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| AppError::io(Category::Data, path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ArtifactHash {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no timestamps, so two runs
/// over the same inputs produce the same manifest.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub options: BTreeMap<String, serde_json::Value>,
    pub config: Option<FileHash>,
    pub inputs: Vec<FileHash>,
    pub params: serde_json::Value,
    pub artifacts: Vec<ArtifactHash>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            options: BTreeMap::new(),
            config: None,
            inputs: Vec::new(),
            params: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    pub fn option(&mut self, key: &str, value: impl Serialize) {
        self.options.insert(key.into(), serde_json::to_value(value).expect("options serialize"));
    }

    /// Record an input file under the name it should appear as.
    pub fn input(&mut self, shown: &str, path: &Path) -> Result<()> {
        let sha256 = hash_file(path)?;
        self.inputs.push(FileHash { path: shown.into(), sha256 });
        Ok(())
    }
}

/// Artifacts of one run, keyed by path relative to the output directory.
#[derive(Debug, Default)]
pub struct Output {
    files: BTreeMap<String, Vec<u8>>,
}

impl Output {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rel: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        let rel = rel.into();
        assert!(rel != MANIFEST, "manifest is written by commit");
        self.files.insert(rel, bytes.into());
    }

    pub fn get(&self, rel: &str) -> Option<&[u8]> {
        self.files.get(rel).map(Vec::as_slice)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Write all artifacts plus the manifest to `out`. An existing `out` is
    /// replaced only when it is empty or holds a previous run's manifest.
    pub fn commit(self, out: &Path, mut manifest: Manifest) -> Result<Manifest> {
        check_target(out)?;
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| AppError::io(Category::Config, &parent, e))?;
        let stage = tempfile::Builder::new()
            .prefix(".ssm-stage-")
            .tempdir_in(&parent)
            .map_err(|e| AppError::io(Category::Config, &parent, e))?;

        manifest.artifacts = self
            .files
            .iter()
            .map(|(rel, bytes)| ArtifactHash { path: rel.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) })
            .collect();
        for (rel, bytes) in &self.files {
            let path = stage.path().join(rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| AppError::io(Category::Computation, dir, e))?;
            }
            fs::write(&path, bytes).map_err(|e| AppError::io(Category::Computation, &path, e))?;
        }
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        let mpath = stage.path().join(MANIFEST);
        fs::write(&mpath, json).map_err(|e| AppError::io(Category::Computation, &mpath, e))?;

        let staged = stage.keep();
        if out.exists() {
            let old = tempfile::Builder::new()
                .prefix(".ssm-old-")
                .tempdir_in(&parent)
                .map_err(|e| AppError::io(Category::Config, &parent, e))?;
            let old_path = old.path().join("previous");
            fs::rename(out, &old_path).map_err(|e| AppError::io(Category::Config, out, e))?;
            if let Err(e) = fs::rename(&staged, out) {
                let _ = fs::rename(&old_path, out);
                let _ = fs::remove_dir_all(&staged);
                return Err(AppError::io(Category::Computation, out, e));
            }
            drop(old);
        } else if let Err(e) = fs::rename(&staged, out) {
            let _ = fs::remove_dir_all(&staged);
            return Err(AppError::io(Category::Computation, out, e));
        }
        Ok(manifest)
    }
}

/// Refuse to clobber a directory that was not produced by this tool.
pub fn check_target(out: &Path) -> Result<()> {
    if !out.exists() {
        return Ok(());
    }
    if !out.is_dir() {
        return Err(AppError::config(format!("output path {} exists and is not a directory", out.display())));
    }
    let empty = fs::read_dir(out).map_err(|e| AppError::io(Category::Config, out, e))?.next().is_none();
    if empty || out.join(MANIFEST).is_file() {
        Ok(())
    } else {
        Err(AppError::config(format!(
            "output directory {} is not empty and has no {MANIFEST}; refusing to overwrite",
            out.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(out: &Path, body: &str) -> Result<Manifest> {
        let mut o = Output::new();
        o.add("a.csv", body.as_bytes());
        o.add("sub/b.csv", "x\n");
        o.commit(out, Manifest::new("test"))
    }

    #[test]
    fn commit_writes_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let m1 = run(&out, "1\n").unwrap();
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "1\n");
        assert!(out.join("sub/b.csv").is_file());
        let first = fs::read(out.join(MANIFEST)).unwrap();
        run(&out, "1\n").unwrap();
        assert_eq!(fs::read(out.join(MANIFEST)).unwrap(), first);
        let m2 = run(&out, "2\n").unwrap();
        assert_ne!(m1.artifacts[0].sha256, m2.artifacts[0].sha256);
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "2\n");
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn foreign_directory_is_left_alone() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("keep.txt"), "mine").unwrap();
        let err = run(dir.path(), "1\n").unwrap_err();
        assert_eq!(err.category, Category::Config);
        assert_eq!(fs::read_to_string(dir.path().join("keep.txt")).unwrap(), "mine");
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
