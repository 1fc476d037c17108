//! Manifests and artifact writing.
//!
//! Every artifact starts with the resolved parameters of the run: `#`
//! comment lines in CSV, a `manifest` object in JSON. Worker counts are
//! left out because they do not affect results.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, Value)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            entries: vec![
                ("tool".into(), Value::from("sieved")),
                ("version".into(), Value::from(env!("CARGO_PKG_VERSION"))),
                ("command".into(), Value::from(command)),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn to_value(&self) -> Value {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        Value::Object(map)
    }

    fn csv_header(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("# {k}: {s}\n"),
                other => format!("# {k}: {other}\n"),
            })
            .collect()
    }
}

/// Artifact text: manifest plus a CSV body or a JSON result document.
pub fn render(manifest: &Manifest, format: Format, csv_body: &str, json_body: &str) -> String {
    match format {
        Format::Csv => manifest.csv_header() + csv_body,
        Format::Json => {
            let head =
                serde_json::to_string_pretty(&manifest.to_value()).expect("manifest is JSON");
            format!("{{\n\"manifest\": {head},\n\"result\": {json_body}\n}}\n")
        }
    }
}

/// Writes to `out`, or to standard output when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Writes through a temporary file and a rename, so a killed run never
/// leaves a truncated artifact.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_manifest_is_commented() {
        let m = Manifest::new("bands").with("lambda", 4.0).with("ell", 1);
        let text = render(&m, Format::Csv, "lo,hi\n", "");
        assert!(text.starts_with("# tool: sieved\n# version: "));
        assert!(text.contains("# lambda: 4.0\n# ell: 1\nlo,hi\n"));
    }

    #[test]
    fn json_document_parses() {
        let m = Manifest::new("bands").with("k", 3);
        let text = render(&m, Format::Json, "", "[1.0e0]");
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["manifest"]["k"], 3);
        assert_eq!(v["result"][0], 1.0);
    }
}
