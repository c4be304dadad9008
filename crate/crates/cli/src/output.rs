//! All run outputs go through one [`OutputSink`], which records checksums,
//! writes the manifest last and removes partial outputs on failure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProducedFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub config: C,
    pub versions: Versions,
    pub seeds: Vec<u64>,
    pub files: Vec<ProducedFile>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub ikegmres: &'static str,
    pub ikegmres_cli: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self { ikegmres: ikegmres::VERSION, ikegmres_cli: env!("CARGO_PKG_VERSION") }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[derive(Debug)]
pub struct OutputSink {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<ProducedFile>,
    finished: bool,
}

impl OutputSink {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        let existed = dir.exists();
        if existed && !dir.is_dir() {
            return Err(CliError::Validation(format!("{} exists and is not a directory", dir.display())));
        }
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), created_dir: !existed, files: Vec::new(), finished: false })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(ProducedFile { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(path)
    }

    /// Writes the manifest and keeps every output.
    pub fn finish<C: Serialize>(mut self, config: C, seeds: Vec<u64>) -> Result<PathBuf, CliError> {
        let manifest = RunManifest { config, versions: Versions::default(), seeds, files: self.files.clone() };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
        let path = self.dir.join(MANIFEST_NAME);
        write_atomic(&path, text.as_bytes())?;
        self.finished = true;
        Ok(path)
    }
}

impl Drop for OutputSink {
    fn drop(&mut self) {
        if self.finished {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(self.dir.join(&f.path));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
