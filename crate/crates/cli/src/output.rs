//! Deterministic output files: CSV tables stamped with the config
//! hash, and a JSON manifest echoing every default and tolerance.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::RunConfig;

/// FNV-1a over the canonical config text, which includes the resolved
/// seed and every command-line override, so two runs produce identical
/// files exactly when their effective inputs agree.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let text = cfg.to_text();
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub struct CsvWriter {
    path: PathBuf,
    lines: Vec<String>,
}

impl CsvWriter {
    pub fn new(dir: &Path, name: &str, hash: &str, columns: &str) -> Self {
        CsvWriter {
            path: dir.join(name),
            lines: vec![format!("# config {hash}"), columns.to_string()],
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    pub fn finish(self) -> Result<PathBuf, std::io::Error> {
        let mut f = std::fs::File::create(&self.path)?;
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(self.path)
    }
}

pub struct Manifest {
    root: Map<String, Value>,
    resolved: Map<String, Value>,
    metrics: Map<String, Value>,
    outputs: Vec<Value>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, hash: &str) -> Self {
        let mut root = Map::new();
        root.insert("command".into(), json!(command));
        root.insert("config_hash".into(), json!(hash));
        root.insert("seed".into(), json!(cfg.analysis.seed));
        root.insert("warnings".into(), json!(cfg.warnings));
        root.insert("config".into(), json!(cfg.to_text()));
        let defaults: Map<String, Value> = conelab::consts::table()
            .into_iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        root.insert("defaults".into(), Value::Object(defaults));
        Manifest { root, resolved: Map::new(), metrics: Map::new(), outputs: Vec::new() }
    }

    pub fn resolve(&mut self, key: &str, value: Value) {
        self.resolved.insert(key.to_string(), value);
    }

    pub fn metric(&mut self, key: &str, value: Value) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(json!(path.file_name().unwrap_or_default().to_string_lossy()));
    }

    pub fn write(mut self, dir: &Path) -> Result<PathBuf, std::io::Error> {
        self.root.insert("resolved".into(), Value::Object(self.resolved));
        self.root.insert("metrics".into(), Value::Object(self.metrics));
        self.root.insert("outputs".into(), Value::Array(self.outputs));
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&Value::Object(self.root))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Creates the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<(), std::io::Error> {
    std::fs::create_dir_all(dir)
}
