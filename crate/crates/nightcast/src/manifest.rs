use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::Cli;
use crate::error::{Error, Result};
use crate::formats::sha256_hex;
use crate::io::{read_file, read_json, to_json, write_file};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_hex(&read_file(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    /// Seconds since the Unix epoch at start.
    pub started: f64,
    pub elapsed_ms: f64,
    /// Per-generation timings of single optimizer runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generation_ms: Vec<f64>,
}

/// Record of one CLI invocation. `invocation` holds the fully resolved
/// arguments; re-executing it reproduces every listed output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub invocation: Cli,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub wall_clock: WallClock,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_file(&path, &to_json(self))?;
        Ok(path)
    }

    /// Fails when an input file no longer matches its recorded digest.
    pub fn check_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = FileDigest::of_file(&input.path)?;
            if now.sha256 != input.sha256 {
                return Err(Error::Validation(format!(
                    "input {} changed since the run (sha256 {} != {})",
                    input.path.display(),
                    now.sha256,
                    input.sha256
                )));
            }
        }
        Ok(())
    }
}
