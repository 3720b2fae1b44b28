//! File emission. Every file starts with the same provenance header: tool
//! version, command and the SHA-256 of the canonical configuration.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use trapspec::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// SHA-256 of the canonical serialization (sorted keys, no whitespace).
pub fn config_hash(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("JSON values serialize");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct Emitter {
    dir: PathBuf,
    pub format: Format,
    pub hash: String,
    command: String,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format, hash: String, command: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            hash,
            command: command.to_string(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Header lines without the comment marker.
    pub fn header(&self, extra: &[String]) -> String {
        let mut h = format!(
            "trapspec {} command={}\nconfig_sha256={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.hash
        );
        for line in extra {
            h.push_str(line);
            h.push('\n');
        }
        h
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, content)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// A table as `<stem>.csv` or `<stem>.json` depending on the format.
    /// `rows` hold already formatted cells.
    pub fn table(
        &self,
        stem: &str,
        columns: &[&str],
        rows: &[Vec<String>],
        extra: &[String],
    ) -> Result<PathBuf> {
        match self.format {
            Format::Csv => self.write(
                &format!("{stem}.csv"),
                &csv_text(&self.header(extra), columns, rows),
            ),
            Format::Json => {
                let records: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|r| {
                        serde_json::Value::Object(
                            columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.to_string(), json_cell(v)))
                                .collect(),
                        )
                    })
                    .collect();
                self.json(stem, extra, serde_json::Value::Array(records))
            }
        }
    }

    /// `data` wrapped with the header fields as `<stem>.json`.
    pub fn json(&self, stem: &str, extra: &[String], data: serde_json::Value) -> Result<PathBuf> {
        let mut meta = serde_json::Map::new();
        for line in self.header(extra).lines() {
            let (k, v) = line.split_once('=').unwrap_or(("note", line));
            meta.insert(
                k.trim().to_string(),
                serde_json::Value::String(v.trim().to_string()),
            );
        }
        let doc = serde_json::json!({ "meta": meta, "data": data });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
        self.write(&format!("{stem}.json"), &(text + "\n"))
    }

    /// Writes pre-rendered text (already carrying its header).
    pub fn raw(&self, name: &str, content: &str) -> Result<PathBuf> {
        self.write(name, content)
    }
}

pub fn csv_text(header: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Numbers stay numbers in JSON, empty cells become `null`.
fn json_cell(s: &str) -> serde_json::Value {
    if s.is_empty() {
        return serde_json::Value::Null;
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => serde_json::Number::from_f64(v)
            .map(serde_json::Value::Number)
            .unwrap_or_else(|| serde_json::Value::String(s.to_string())),
        _ => serde_json::Value::String(s.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b": 1, "a": [1, 2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a":[1,2],"b":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        let c: serde_json::Value = serde_json::from_str(r#"{"a":[1,2],"b":2}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn csv_layout() {
        let t = csv_text("x=1\n", &["a", "b"], &[vec!["1".into(), "".into()]]);
        assert_eq!(t, "# x=1\na,b\n1,\n");
    }

    #[test]
    fn json_cells() {
        assert_eq!(json_cell(""), serde_json::Value::Null);
        assert_eq!(
            json_cell("bound"),
            serde_json::Value::String("bound".into())
        );
        assert_eq!(json_cell("1.5e0"), serde_json::json!(1.5));
    }
}
