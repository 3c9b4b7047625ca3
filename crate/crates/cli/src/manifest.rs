//! Run manifests: written before any output so a run can be reproduced
//! (same binary + same inputs ⇒ bitwise-identical outputs).

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// Full command line as invoked.
    pub command: Vec<String>,
    pub seed: Option<u64>,
    /// Resolved option snapshot for the subcommand.
    pub config: serde_json::Value,
    /// SHA-256 of every input file.
    pub inputs: BTreeMap<String, String>,
    /// Paths this run will write.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "transnn",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        let bytes = fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs
            .insert(path.display().to_string(), format!("sha256:{hex}"));
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> PathBuf {
        self.outputs.push(path.display().to_string());
        path.to_path_buf()
    }

    /// Write `manifest.json` into the output directory. Call before
    /// creating any output file.
    pub fn write(&self, out_dir: &Path) -> io::Result<()> {
        fs::create_dir_all(out_dir)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(out_dir.join("manifest.json"), text)
    }
}
