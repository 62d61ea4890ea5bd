//! Option values gathered from flags and an optional `key = value` config
//! file. Flags win over the file.

use std::collections::BTreeMap;
use std::fs;
use std::str::FromStr;

use crate::error::CliError;

/// Keys a config file may set.
const KNOWN_KEYS: &[&str] = &[
    "s",
    "t",
    "v",
    "n",
    "H",
    "p",
    "m",
    "k",
    "seed",
    "trials",
    "out",
    "format",
    "max-omega",
    "alg",
    "bound",
    "dag",
    "preset",
    "block",
    "grid",
    "memory",
    "schedule",
    "schedule-out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn parse_config(text: &str, path: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{path}:{}: expected `key = value`",
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "{path}:{}: unknown key {key:?}",
                i + 1
            )));
        }
        values.insert(key.to_string(), value.trim().to_string());
    }
    Ok(values)
}

impl Settings {
    /// Combines flag values with the config file at `config`, if any.
    pub fn resolve(
        flags: Vec<(&'static str, Option<String>)>,
        config: Option<&str>,
    ) -> Result<Self, CliError> {
        let mut values = match config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.to_string(),
                    source,
                })?;
                parse_config(&text, path)?
            }
            None => BTreeMap::new(),
        };
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: cannot parse {raw:?}"))),
        }
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|raw| {
                raw.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("--{key}: cannot parse {raw:?}")))
            })
            .transpose()
    }

    /// A comma-separated list. An explicitly empty list is a usage error.
    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>, CliError> {
        let Some(raw) = self.get(key) else {
            return Ok(default.to_vec());
        };
        let items: Vec<&str> = raw
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect();
        if items.is_empty() {
            return Err(CliError::Usage(format!("--{key}: empty list")));
        }
        items
            .into_iter()
            .map(|w| {
                w.parse()
                    .map_err(|_| CliError::Usage(format!("--{key}: cannot parse {w:?}")))
            })
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("" | "true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(other) => Err(CliError::Usage(format!(
                "--{key}: expected true or false, got {other:?}"
            ))),
        }
    }

    pub fn format(&self, default: Format) -> Result<Format, CliError> {
        match self.get("format") {
            None => Ok(default),
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some("text") => Ok(Format::Text),
            Some(other) => Err(CliError::Usage(format!(
                "--format: expected json, csv or text, got {other:?}"
            ))),
        }
    }
}
