//! Run manifests.
//!
//! Every CLI run writes a manifest beside its primary output: the
//! subcommand, every flag with defaults materialized, and the input/output
//! paths as given. A manifest carries no timestamps or absolute paths, so
//! re-running the command it describes reproduces the artifacts
//! byte-for-byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Long flag name -> value, sorted by flag name.
    pub args: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub enum ManifestError {
    Io(std::io::Error),
    Malformed { detail: String },
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestError::Io(e) => write!(f, "io: {e}"),
            ManifestError::Malformed { detail } => write!(f, "malformed-manifest: {detail}"),
        }
    }
}

impl std::error::Error for ManifestError {}

impl From<std::io::Error> for ManifestError {
    fn from(e: std::io::Error) -> Self {
        ManifestError::Io(e)
    }
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "codeprune".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn arg<V: Serialize>(mut self, name: &str, value: V) -> Self {
        self.args.insert(
            name.to_string(),
            serde_json::to_value(value).expect("flag values are plain scalars"),
        );
        self
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Reconstruct the argv that reproduces this run, `codeprune` excluded.
    pub fn to_argv(&self) -> Vec<String> {
        let mut argv = vec![self.command.clone()];
        for (name, value) in &self.args {
            match value {
                serde_json::Value::Bool(true) => argv.push(format!("--{name}")),
                serde_json::Value::Bool(false) => {}
                serde_json::Value::String(s) => {
                    argv.push(format!("--{name}"));
                    argv.push(s.clone());
                }
                other => {
                    argv.push(format!("--{name}"));
                    argv.push(other.to_string());
                }
            }
        }
        argv
    }

    /// Manifest location for a given primary output path.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write_beside(&self, output: &Path) -> Result<PathBuf, ManifestError> {
        let path = Self::path_for(output);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(path)
    }

    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self, ManifestError> {
        let r = BufReader::new(File::open(path)?);
        serde_json::from_reader(r).map_err(|e| ManifestError::Malformed {
            detail: e.to_string(),
        })
    }
}
