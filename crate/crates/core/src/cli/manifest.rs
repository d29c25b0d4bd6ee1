use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;
use crate::io::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Self-description of one command run. Output paths are relative to the
/// output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub generator: &'static str,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path, shown_as: String) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Runtime(crate::Error::io(path, e)))?;
    Ok(FileDigest { path: shown_as, sha256: sha256_hex(&bytes) })
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        write_atomic(&out_dir.join(MANIFEST_FILE), self.to_json().as_bytes())?;
        Ok(())
    }
}
