//! Run manifest: enough to re-run a command exactly — the resolved config,
//! the seed and a hash of every written artifact.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    outputs: Vec<OutputEntry>,
}

#[derive(Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write `run_manifest.json` next to the listed artifacts.
pub fn write(command: &str, config: &RunConfig, outputs: &[PathBuf]) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(outputs.len());
    for path in outputs {
        entries.push(OutputEntry {
            path: path.display().to_string(),
            sha256: sha256_hex(path)?,
        });
    }
    let manifest = RunManifest {
        command,
        config,
        outputs: entries,
    };
    let path = config.out.join("run_manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
