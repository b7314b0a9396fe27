//! Run configuration: built-in defaults, overlaid by an optional
//! `key = value` config file, overlaid by command-line flags. Every
//! command writes the fully resolved set next to its outputs so a run
//! can be reproduced from that one file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Flat, ordered key/value store. Values are kept as canonical strings
/// (numbers re-rendered through `Display`) so the emitted file is
/// byte-stable for a given resolved configuration.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overlay `key = value` lines from `path`. Blank lines and lines
    /// starting with `#` are skipped; anything else without `=` is an
    /// error. Unknown keys are rejected so typos cannot silently fall
    /// back to defaults.
    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Parse(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim();
            if !self.map.contains_key(key) {
                return Err(CliError::Parse(format!(
                    "{}:{}: unknown config key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
            self.map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Overlay a command-line flag if it was provided.
    pub fn set_opt(&mut self, key: &str, value: &Option<impl Display>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Parse(format!("missing config key `{key}`")))
    }

    /// Read and canonicalize: the stored text is replaced by the parsed
    /// value's `Display` form so the resolved file shows exactly what ran.
    pub fn f64(&mut self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self
            .raw(key)?
            .parse()
            .map_err(|_| CliError::Parse(format!("config key `{key}` is not a number")))?;
        self.set(key, v);
        Ok(v)
    }

    pub fn usize(&mut self, key: &str) -> Result<usize, CliError> {
        let v: usize = self
            .raw(key)?
            .parse()
            .map_err(|_| CliError::Parse(format!("config key `{key}` is not a non-negative integer")))?;
        self.set(key, v);
        Ok(v)
    }

    pub fn u64(&mut self, key: &str) -> Result<u64, CliError> {
        let v: u64 = self
            .raw(key)?
            .parse()
            .map_err(|_| CliError::Parse(format!("config key `{key}` is not a non-negative integer")))?;
        self.set(key, v);
        Ok(v)
    }

    pub fn string(&self, key: &str) -> Result<String, CliError> {
        Ok(self.raw(key)?.to_string())
    }

    /// Sorted `key = value` lines, one per entry.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Write the resolved configuration into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("resolved.cfg");
        fs::write(&path, self.render())
            .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Instance label used in CSV rows: the input file stem, or a
/// deterministic tag for generated instances.
pub fn instance_name(input: Option<&Path>, synthetic: Option<(u64, usize, usize)>) -> String {
    if let Some(path) = input {
        if let Some(stem) = path.file_stem() {
            return stem.to_string_lossy().into_owned();
        }
    }
    if let Some((seed, k, n)) = synthetic {
        return format!("synthetic-{seed}-{k}-{n}");
    }
    "instance".to_string()
}
