//! Config resolution (flag > config file > default), error classes and manifests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use shapecodes::binio::sha256_hex;
use shapecodes::kv::KvMap;
use shapecodes::Error;

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config (exit 2).
    Usage(String),
    /// Missing, unreadable or inconsistent input files (exit 3).
    Data(String),
    /// Non-finite loss or failed numeric check (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn data_err(context: &str, e: impl fmt::Display) -> CliError {
    CliError::Data(format!("{context}: {e}"))
}

/// The fully resolved settings of one command.
pub struct Resolved {
    file: KvMap,
    pub values: KvMap,
}

impl Resolved {
    /// Loads the optional config file and rejects keys outside `allowed`.
    pub fn load(config: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| data_err(&format!("reading {}", p.display()), e))?;
                KvMap::parse(&text).map_err(|e| CliError::Usage(e.to_string()))?
            }
            None => KvMap::new(),
        };
        file.ensure_keys(allowed).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Resolved { file, values: KvMap::new() })
    }

    /// Flag, else config entry, else default; recorded for the manifest.
    pub fn get<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s.parse().map_err(|_| CliError::Usage(format!("bad value for '{key}': '{s}'")))?,
                None => default,
            },
        };
        self.values.set(key, v.to_string());
        Ok(v)
    }

    pub fn get_opt(&mut self, key: &str, flag: Option<String>) -> Option<String> {
        let v = flag.or_else(|| self.file.get(key).map(str::to_string));
        if let Some(v) = &v {
            self.values.set(key, v);
        }
        v
    }
}

/// `0,±30,+60,-90` → sorted-by-input list of degrees.
pub fn parse_elevations(s: &str) -> CliResult<Vec<i16>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (both, digits) = match part.strip_prefix('±').or_else(|| part.strip_prefix("+-")) {
            Some(rest) => (true, rest),
            None => (false, part),
        };
        let v: i16 = digits.trim_start_matches('+').parse().map_err(|_| CliError::Usage(format!("bad elevation '{part}'")))?;
        if both && v != 0 {
            out.push(-v);
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Usage("no elevations given".into()));
    }
    Ok(out)
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| CliError::Usage(format!("bad {what} '{p}'"))))
        .collect()
}

pub fn file_hash(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| data_err(&format!("reading {}", path.display()), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| data_err(&format!("writing {}", path.display()), e))
}

pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<primary>.manifest`: command, resolved settings, input and output hashes.
pub fn write_manifest(primary: &Path, command: &str, settings: &KvMap, inputs: &[(&str, &Path)], outputs: &[&Path]) -> CliResult<()> {
    let mut m = KvMap::new();
    m.set("command", command);
    m.set("version", env!("CARGO_PKG_VERSION"));
    m.extend(settings);
    for (name, p) in inputs {
        m.set(&format!("input.{name}"), p.display());
        m.set(&format!("input.{name}.sha256"), file_hash(p)?);
    }
    for p in outputs {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        m.set(&format!("output.{name}.sha256"), file_hash(p)?);
    }
    write_file(&with_suffix(primary, ".manifest"), m.render().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elevation_lists() {
        assert_eq!(parse_elevations("0,±30,±60,±90").unwrap(), vec![0, -30, 30, -60, 60, -90, 90]);
        assert_eq!(parse_elevations("-30, +45").unwrap(), vec![-30, 45]);
        assert!(parse_elevations("x").is_err());
        assert!(parse_elevations("").is_err());
    }
}
