//! Artifact files, the run manifest and the stderr event stream.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes one JSON object per line to standard error.
pub fn event(name: &str, fields: serde_json::Value) {
    let mut obj = serde_json::Map::new();
    obj.insert("ts".into(), chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true).into());
    obj.insert("event".into(), name.into());
    if let serde_json::Value::Object(extra) = fields {
        obj.extend(extra);
    }
    let line = serde_json::Value::Object(obj).to_string();
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Shortest round-trip decimal, `inf` for infinities.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects artifacts written below one output directory.
#[derive(Debug)]
pub struct ArtifactSink {
    root: PathBuf,
    records: Mutex<Vec<ArtifactRecord>>,
}

impl ArtifactSink {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), records: Mutex::new(Vec::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (forward slashes) under the root.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let rec = ArtifactRecord { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() };
        event("artifact", serde_json::json!({ "path": rel, "sha256": rec.sha256 }));
        self.records.lock().expect("artifact lock").push(rec);
        Ok(())
    }

    pub fn write_table(&self, rel: &str, table: &Table) -> Result<(), CliError> {
        self.write(rel, &table.to_bytes()?)
    }

    /// Records sorted by path, so manifests do not depend on scheduling.
    pub fn records(&self) -> Vec<ArtifactRecord> {
        let mut v = self.records.lock().expect("artifact lock").clone();
        v.sort_by(|a, b| a.path.cmp(&b.path));
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub experiments: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    pub fn write(&self, root: &Path) -> Result<PathBuf, CliError> {
        let path = root.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -2.5e-13, std::f64::consts::PI, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn table_bytes_are_plain_csv() {
        let mut t = Table::new(&["time_s", "value"]);
        t.push_numbers(&[0.5, 2.0]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "time_s,value\n5e-1,2e0\n");
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
