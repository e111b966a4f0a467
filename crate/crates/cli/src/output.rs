//! Output directory handling and the run manifest.

use crate::Failure;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

/// Writes artifacts under one directory and remembers their hashes.
pub struct Outputs {
    dir: PathBuf,
    pub written: Vec<Artifact>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(Failure::io)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn bytes(&mut self, name: &str, data: Vec<u8>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(Failure::io)?;
        }
        std::fs::write(&path, &data).map_err(Failure::io)?;
        self.written.push(Artifact { file: name.to_string(), sha256: sha256_hex(&data) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut data = serde_json::to_vec_pretty(value).map_err(Failure::io)?;
        data.push(b'\n');
        self.bytes(name, data)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub config_path: Option<String>,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub deterministic: bool,
    pub versions: Versions,
    pub outputs: &'a [Artifact],
    /// Omitted in deterministic mode so reruns give identical manifests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

#[derive(Serialize)]
pub struct Versions {
    pub extmix_cli: &'static str,
    pub extmix: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        // both crates are versioned together in the workspace
        Self { extmix_cli: env!("CARGO_PKG_VERSION"), extmix: env!("CARGO_PKG_VERSION") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vectors() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
