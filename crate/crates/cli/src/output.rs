//! CSV writing, checksums and run manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "deltakick";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip precision: 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub outputs: Vec<OutputFile>,
    #[serde(default)]
    pub summary: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Manifest {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            outputs: Vec::new(),
            summary: serde_json::Map::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config("manifest", format!("cannot read {}: {e}", path.display()))
        })?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::config("manifest", format!("{}: {e}", path.display())))?;
        manifest.config.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::runtime(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

/// Writes `header` and `rows` to `dir/name` and returns the checksum record.
pub fn write_csv<I>(dir: &Path, name: &str, header: &str, rows: I) -> Result<OutputFile, CliError>
where
    I: IntoIterator<Item = String>,
{
    let path = dir.join(name);
    let mut out = BufWriter::new(fs::File::create(&path)?);
    writeln!(out, "{header}")?;
    let mut count = 0;
    for row in rows {
        writeln!(out, "{row}")?;
        count += 1;
    }
    out.flush()?;
    drop(out);
    Ok(OutputFile {
        file: name.to_string(),
        sha256: sha256_file(&path)?,
        rows: count,
    })
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
