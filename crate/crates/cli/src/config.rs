use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parameters from a config file overridden by command-line flags. Every
/// value read is recorded, defaults included, and the record is hashed.
#[derive(Debug, Clone)]
pub struct Params {
    experiment: String,
    given: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Params {
    pub fn new(experiment: &str, file: Option<&Path>, flags: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut given = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(name) = given.remove("experiment") {
            if name != experiment {
                return Err(ConfigError(format!("config is for experiment {name:?}, not {experiment:?}")));
            }
        }
        given.extend(flags);
        Ok(Self { experiment: experiment.to_string(), given, resolved: BTreeMap::new() })
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        let value = match self.given.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|e| ConfigError(format!("{key} = {raw:?}: {e}")))?,
            None => default,
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T::Err: Display,
    {
        let values = match self.given.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|s| s.trim().parse::<T>().map_err(|e| ConfigError(format!("{key} = {raw:?}: {e}"))))
                .collect::<Result<Vec<T>, _>>()?,
            None => default.iter().map(|v| v.to_string().parse::<T>().ok().expect("default round-trips")).collect(),
        };
        let joined = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        self.resolved.insert(key.to_string(), joined);
        Ok(values)
    }

    /// Records a derived value (such as an input file digest) in the hash.
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn check(&self, cond: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
        if cond { Ok(()) } else { Err(ConfigError(msg())) }
    }

    /// Keys given but never read point at typos.
    pub fn reject_unknown(&self) -> Result<(), ConfigError> {
        let unknown: Vec<&String> = self.given.keys().filter(|k| !self.resolved.contains_key(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(format!("unknown parameters for {}: {unknown:?}", self.experiment)))
        }
    }

    /// Resolved configuration in `key = value` form, sorted by key.
    pub fn canonical(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.resolved {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn experiment(&self) -> &str {
        &self.experiment
    }
}
