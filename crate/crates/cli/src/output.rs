//! Deterministic artifact writers: report tables (CSV or JSON lines) and JSON
//! sidecars embedding the effective configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Jsonl => write!(f, "jsonl"),
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format `{other}` (use csv or jsonl)")),
        }
    }
}

/// A report table; cells are preformatted strings.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let record: BTreeMap<&str, &str> = self
                .headers
                .iter()
                .map(|h| h.as_str())
                .zip(row.iter().map(|c| c.as_str()))
                .collect();
            out.push_str(&serde_json::to_string(&record).expect("string map serializes"));
            out.push('\n');
        }
        out
    }

    /// Write as `<stem>.csv` or `<stem>.jsonl`; returns the file name.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<String, CliError> {
        let (name, content) = match format {
            OutputFormat::Csv => (format!("{stem}.csv"), self.to_csv()),
            OutputFormat::Jsonl => (format!("{stem}.jsonl"), self.to_jsonl()),
        };
        write_bytes(&dir.join(&name), content.as_bytes())?;
        Ok(name)
    }
}

/// Shortest round-trip decimal for a float cell.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Sidecar JSON accompanying every artifact: command, seed, the full
/// effective configuration and a fingerprint of it, plus a summary payload.
#[derive(Serialize)]
pub struct Sidecar<T: Serialize> {
    pub command: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub effective_config: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
    pub summary: T,
}

pub fn fingerprint(seed: u64, effective: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for (k, v) in effective {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

pub fn write_sidecar<T: Serialize>(
    dir: &Path,
    name: &str,
    sidecar: &Sidecar<T>,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut body = serde_json::to_string_pretty(sidecar)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    body.push('\n');
    write_bytes(&path, body.as_bytes())?;
    Ok(path)
}
