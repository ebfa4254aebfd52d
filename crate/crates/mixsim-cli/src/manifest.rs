//! Run manifest: a flat `key = value` text file recording the artifact
//! version, seed, timestamps, every emitted output file, and a pointer to
//! the per-subrun config echoes (which round-trip through the parser).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub version: String,
    pub run_name: String,
    pub master_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Every file the run emitted (CSV bodies and config echoes).
    pub outputs: Vec<PathBuf>,
    pub manifest_path: PathBuf,
}

pub fn artifact_version() -> String {
    format!("mixsim {}", env!("CARGO_PKG_VERSION"))
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self) -> Result<(), CliError> {
        let mut body = String::new();
        body.push_str(&format!("version = {}\n", self.version));
        body.push_str(&format!("run = {}\n", self.run_name));
        body.push_str(&format!("seed = {}\n", self.master_seed));
        body.push_str(&format!("started_unix = {}\n", self.started_unix));
        body.push_str(&format!("finished_unix = {}\n", self.finished_unix));
        for out in &self.outputs {
            body.push_str(&format!("output = {}\n", out.display()));
        }
        let mut f = fs::File::create(&self.manifest_path)?;
        f.write_all(body.as_bytes())?;
        Ok(())
    }
}

/// Parse a manifest back into its key/value pairs (order preserved).
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Io(format!("malformed manifest line '{}'", line)));
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
