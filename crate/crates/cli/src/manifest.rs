use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    /// SHA-256 of each input file, keyed by the path given on the command line.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new() -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("levelstat".to_string(), env!("CARGO_PKG_VERSION").to_string());
        ManifestBuilder {
            started: Instant::now(),
            manifest: RunManifest {
                command_line: std::env::args().collect(),
                seeds: Vec::new(),
                versions,
                input_hashes: BTreeMap::new(),
                outputs: Vec::new(),
                wall_time_seconds: 0.0,
            },
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seeds.push(seed);
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest
            .input_hashes
            .insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self, path: &Path) -> Result<RunManifest> {
        self.manifest.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(self.manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `<out>.manifest.json`
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
