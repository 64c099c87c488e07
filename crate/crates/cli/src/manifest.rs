//! Run manifests: a plain-text record of what a command read, wrote, and was
//! configured with, written as `<command>.manifest` next to the outputs.
//!
//! Manifests contain no timestamps or absolute environment details, so two
//! runs with the same inputs and settings produce byte-identical files. The
//! output directory itself is deliberately not recorded: paths are stored as
//! given (inputs) or relative to the output directory (outputs).

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub struct Manifest {
    command: String,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
    config: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: BTreeMap::new(),
        }
    }

    /// Record an input path exactly as the user supplied it.
    pub fn input(&mut self, key: &str, path: impl AsRef<Path>) {
        self.inputs
            .push((key.to_string(), path.as_ref().display().to_string()));
    }

    /// Record an output by its name relative to the output directory (or the
    /// explicit path the user chose).
    pub fn output(&mut self, key: &str, name: &str) {
        self.outputs.push((key.to_string(), name.to_string()));
    }

    /// Record an effective configuration value.
    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command={}\n", self.command));
        out.push_str(&format!("version={}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.inputs {
            out.push_str(&format!("input.{k}={v}\n"));
        }
        for (k, v) in &self.outputs {
            out.push_str(&format!("output.{k}={v}\n"));
        }
        let mut config_block = String::new();
        for (k, v) in &self.config {
            config_block.push_str(&format!("config.{k}={v}\n"));
        }
        out.push_str(&config_block);
        let digest = Sha256::digest(config_block.as_bytes());
        out.push_str(&format!("config_hash={digest:x}\n"));
        out
    }

    /// Write `<command>.manifest` into `out_dir` and return its path.
    pub fn write(&self, out_dir: &Path) -> io::Result<PathBuf> {
        let path = out_dir.join(format!("{}.manifest", self.command));
        fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// An output file: where to write it, and the name recorded in the manifest.
pub struct OutFile {
    pub path: PathBuf,
    pub name: String,
}

/// Resolve an output location: an absolute override is used verbatim, a
/// relative one is placed under `out_dir`, and `None` falls back to the
/// command's default file name.
pub fn resolve_out(out_dir: &Path, explicit: Option<&Path>, default_name: &str) -> OutFile {
    match explicit {
        None => OutFile {
            path: out_dir.join(default_name),
            name: default_name.to_string(),
        },
        Some(p) if p.is_absolute() => OutFile {
            path: p.to_path_buf(),
            name: p.display().to_string(),
        },
        Some(p) => OutFile {
            path: out_dir.join(p),
            name: p.display().to_string(),
        },
    }
}
