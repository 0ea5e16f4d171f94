//! Run manifests: everything needed to reproduce an output set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, with `--out` removed.
    pub argv: Vec<String>,
    /// Resolved options of the subcommand, defaults included.
    pub parameters: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub windows: Vec<crate::roots::SearchWindow>,
    pub threads: Option<usize>,
    pub version: String,
    pub out_dir: String,
    /// File names relative to `out_dir`.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>, out_dir: &Path, threads: Option<usize>) -> Self {
        Self {
            command: command.to_string(),
            argv,
            parameters: serde_json::Value::Null,
            tolerances: serde_json::Value::Null,
            windows: Vec::new(),
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            out_dir: out_dir.display().to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("plain data");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))
    }

    pub fn output_paths(&self) -> Vec<PathBuf> {
        self.outputs.iter().map(|f| Path::new(&self.out_dir).join(f)).collect()
    }
}

/// `argv` without any `--out DIR` or `--out=DIR`.
pub fn strip_out_flag(argv: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept
}
