//! Plain-text `key=value` records: configs, checkpoint metadata, manifests.
//!
//! One pair per line; `#` starts a comment line; blank lines are ignored.
//! Keys keep their first-insertion order so rendering is deterministic.

use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KvMap {
    entries: Vec<(String, String)>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = KvMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::format("key=value", format!("line {}: missing '='", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::format("key=value", format!("line {}: empty key", n + 1)));
            }
            map.set(k, v.trim());
        }
        Ok(map)
    }

    /// Inserts or replaces.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::invalid(format!("missing key '{key}'")))
    }

    /// Parses `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::invalid(format!("bad value for '{key}': '{v}'"))))
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn extend(&mut self, other: &KvMap) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }

    /// Fails on any key outside `allowed`.
    pub fn ensure_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::invalid(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Comma-separated list, e.g. `0.1,0.03`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| Error::invalid(format!("bad list element '{p}'"))))
        .collect()
}

pub fn join_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}
