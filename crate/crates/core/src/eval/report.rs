//! Report files. JSON reports embed a [`Provenance`]; CSV files start with a
//! `# config_hash=... seed=...` comment line.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_hash: config_hash(config)?,
            seed,
        })
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    let mut out = String::with_capacity(16);
    for b in digest.iter().take(8) {
        let _ = write!(out, "{b:02x}");
    }
    Ok(out)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, provenance: &Provenance) -> String {
        let mut out = format!(
            "# command={} config_hash={} seed={}\n",
            provenance.command, provenance.config_hash, provenance.seed
        );
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path, provenance: &Provenance) -> Result<()> {
        std::fs::write(path, self.render(provenance)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"seed": 1})).unwrap();
        assert_eq!(a, config_hash(&serde_json::json!({"seed": 1})).unwrap());
        assert_ne!(a, config_hash(&serde_json::json!({"seed": 2})).unwrap());
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn csv_render() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(vec!["1".into(), "0.5".into()]);
        let p = Provenance {
            command: "cv".into(),
            config_hash: "abc".into(),
            seed: 3,
        };
        assert_eq!(t.render(&p), "# command=cv config_hash=abc seed=3\na,b\n1,0.5\n");
    }
}
