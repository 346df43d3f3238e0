use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn digest(path: &Path) -> io::Result<Self> {
        let data = fs::read(path)?;
        Ok(Self { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&data)), bytes: data.len() as u64 })
    }
}

/// Run record written by `--manifest`.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// Effective arguments after config merging, program name excluded.
    pub arguments: Vec<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)
    }
}
