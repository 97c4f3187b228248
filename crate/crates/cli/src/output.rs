//! Deterministic artifact writers: CSV with fixed 17-significant-digit
//! scientific notation, JSON-lines trajectories, and the per-run manifest.
//! Nothing here reads the clock or iterates an unordered map, so identical
//! configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// `{:.16e}` prints 17 significant digits, enough to round-trip every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A complex number as a two-element `[re, im]` JSON array.
pub fn json_complex(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

/// Run output directory; creates it on first use and records every file
/// written for the manifest.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn target(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    /// Write a CSV file: a fixed header and rows of pre-formatted cells.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        let path = self.target(name);
        let mut text = String::with_capacity(64 * (rows.len() + 1));
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    /// Write a JSON-lines file: one compact JSON object per line.
    pub fn write_jsonl(&mut self, name: &str, lines: &[Value]) -> Result<()> {
        let path = self.target(name);
        let mut out = Vec::with_capacity(128 * lines.len());
        for line in lines {
            serde_json::to_writer(&mut out, line)?;
            out.push(b'\n');
        }
        fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))
    }

    /// Write a pretty-printed JSON report (keys sorted by serde_json's
    /// BTreeMap-backed object representation).
    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.target(name);
        let mut out = serde_json::to_vec_pretty(value)?;
        out.push(b'\n');
        fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))
    }

    /// Write `manifest.json` echoing the resolved configuration, the
    /// artifact version, and the files produced.  Always the last write.
    pub fn write_manifest(
        mut self,
        command: &str,
        config: &BTreeMap<String, String>,
        extra: &[(&str, Value)],
    ) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("artifact".into(), json!("jetstab"));
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert("command".into(), json!(command));
        doc.insert("config".into(), json!(config));
        for (k, v) in extra {
            doc.insert((*k).to_string(), v.clone());
        }
        let mut outputs = self.written.clone();
        outputs.sort();
        doc.insert("outputs".into(), json!(outputs));
        let path = self.root.join("manifest.json");
        let mut out = serde_json::to_vec_pretty(&Value::Object(doc))?;
        out.push(b'\n');
        let mut file = fs::File::create(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        file.write_all(&out)?;
        Ok(())
    }
}
