//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! profile = sin
//! horizon = 2pi
//! steps = 6283
//! ```
//!
//! One pair per line; `#` starts a comment line. Keys may not repeat and
//! must belong to the chosen command. Numbers accept an optional `pi` suffix
//! (`2pi`, `0.5pi`, `pi`). Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    base_dir: PathBuf,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {line}: expected key = value")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(usage(format!("config line {line}: empty key")));
            }
            let value = value.trim().to_string();
            if let Some(prev) = entries.insert(key.clone(), Entry { value, line }) {
                return Err(usage(format!(
                    "config line {line}: key {key:?} already set on line {}",
                    prev.line
                )));
            }
        }
        Ok(Self { entries, base_dir })
    }

    /// Rejects every key not in `allowed`.
    pub fn restrict(&self, allowed: &[&str]) -> Result<(), CliError> {
        for (key, entry) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(usage(format!(
                    "config line {}: unknown key {key:?} (allowed: {})",
                    entry.line,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<&str, CliError> {
        self.str(key).ok_or_else(|| usage(format!("missing required key {key:?}")))
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        let e = &self.entries[key];
        usage(format!("config line {}: {key} = {:?} is not {what}", e.line, e.value))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.str(key)
            .map(|v| parse_number(v).ok_or_else(|| self.bad(key, "a number")))
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?
            .ok_or_else(|| usage(format!("missing required key {key:?}")))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.str(key)
            .map(|v| v.parse().map_err(|_| self.bad(key, "a nonnegative integer")))
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.str(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(self.bad(key, "a boolean")),
            })
            .transpose()
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.str(key)
            .map(|v| {
                v.split(',')
                    .map(|x| parse_number(x.trim()))
                    .collect::<Option<Vec<f64>>>()
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| self.bad(key, "a comma-separated list of numbers"))
            })
            .transpose()
    }

    /// Path value, resolved against the config file's directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.str(key).map(|v| self.base_dir.join(v))
    }
}

/// `1.5`, `2pi`, `pi`, `-0.5pi`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let value = match s.strip_suffix("pi") {
        Some("") => std::f64::consts::PI,
        Some("-") => -std::f64::consts::PI,
        Some(factor) => factor.trim().parse::<f64>().ok()? * std::f64::consts::PI,
        None => s.parse().ok()?,
    };
    value.is_finite().then_some(value)
}

/// Fully resolved parameters of a run, written as `config.resolved.txt`
/// in the same grammar so that it can be fed back in.
#[derive(Debug, Default)]
pub struct Resolved {
    command: String,
    pairs: Vec<(String, String)>,
}

impl Resolved {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            pairs: Vec::new(),
        }
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) {
        self.pairs.push((key.to_string(), value.into()));
    }

    /// Shortest representation that parses back to the same `f64`.
    pub fn num(&mut self, key: &str, value: f64) {
        self.text(key, format!("{value}"));
    }

    pub fn list(&mut self, key: &str, values: &[f64]) {
        let joined = values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
        self.text(key, joined);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# nonmarkov {} (resolved, defaults included)", self.command).unwrap();
        for (k, v) in &self.pairs {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
