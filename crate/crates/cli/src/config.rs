//! Flat key=value parameter maps.
//!
//! Every experiment takes its parameters as `key=value` pairs, either as
//! trailing command-line arguments or as lines of a config file.  Getters
//! record which keys were read; [`Params::finish`] then rejects anything
//! left over, so a typoed key fails loudly instead of silently falling back
//! to a default.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::errors::{CliError, Result};

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

// ── The parameter map ───────────────────────────────────────────────────────

#[derive(Debug, Default)]
pub struct Params {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    /// Parses `key=value` arguments.  Keys may not repeat.
    pub fn from_args(args: &[String]) -> Result<Self> {
        let mut p = Params::default();
        for arg in args {
            let (k, v) = split_pair(arg)?;
            p.insert_new(k, v)?;
        }
        Ok(p)
    }

    /// Parses a config file: one `key=value` per line, `#` comments, blank
    /// lines ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut p = Params::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line).map_err(|e| {
                usage(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            p.insert_new(k, v)?;
        }
        Ok(p)
    }

    fn insert_new(&mut self, key: &str, value: &str) -> Result<()> {
        if self.entries.contains_key(key) {
            return Err(usage(format!("duplicate key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Sets a key unconditionally; command-line flags override config files.
    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    /// Folds an optional named flag into the map (flag wins over any
    /// existing entry).
    pub fn fold<D: std::fmt::Display>(&mut self, key: &str, value: Option<D>) {
        if let Some(v) = value {
            self.set(key, v.to_string());
        }
    }

    fn raw(&self, key: &str) -> Option<&String> {
        let v = self.entries.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    // ── Typed getters ───────────────────────────────────────────────────────

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).cloned().unwrap_or_else(|| default.to_string())
    }

    pub fn req_str(&self, key: &str) -> Result<String> {
        self.raw(key)
            .cloned()
            .ok_or_else(|| usage(format!("missing required key '{key}'")))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse_f64(key, v).map(Some),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| usage(format!("missing required key '{key}'")))
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                usage(format!("key '{key}': expected a nonnegative integer, got '{v}'"))
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(usage(format!(
                    "key '{key}': expected true/false, got '{other}'"
                ))),
            },
        }
    }

    /// Comma-separated float list, e.g. `T-grid=2,5,10`.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| parse_f64(key, s.trim()))
                .collect::<Result<Vec<f64>>>(),
        }
    }

    // ── Bookkeeping ─────────────────────────────────────────────────────────

    /// Rejects any key no getter has touched.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k))
            .map(|k| k.as_str())
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }

    /// All entries in sorted order, for the manifest echo.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn split_pair(arg: &str) -> Result<(&str, &str)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
        _ => Err(usage(format!(
            "expected key=value, got '{arg}'"
        ))),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| usage(format!("key '{key}': expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(usage(format!("key '{key}': value must be finite, got '{v}'")));
    }
    Ok(x)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_and_types_values() {
        let p = Params::from_args(&args(&["alpha=-1", "K=2", "n=64", "grid=1,2,3"])).unwrap();
        assert_eq!(p.req_f64("alpha").unwrap(), -1.0);
        assert_eq!(p.req_f64("K").unwrap(), 2.0);
        assert_eq!(p.usize_or("n", 0).unwrap(), 64);
        assert_eq!(p.f64_list_or("grid", &[]).unwrap(), vec![1.0, 2.0, 3.0]);
        p.finish().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let p = Params::from_args(&args(&["alpha=1", "typo=3"])).unwrap();
        let _ = p.req_f64("alpha").unwrap();
        let err = p.finish().unwrap_err();
        assert!(err.to_string().contains("typo"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_pairs_and_duplicates_fail() {
        assert!(Params::from_args(&args(&["novalue"])).is_err());
        assert!(Params::from_args(&args(&["=3"])).is_err());
        assert!(Params::from_args(&args(&["a=1", "a=2"])).is_err());
        let p = Params::from_args(&args(&["a=zebra"])).unwrap();
        assert!(p.req_f64("a").is_err());
    }

    #[test]
    fn config_files_skip_comments_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\n\nexperiment=beta\nalpha = -1\n").unwrap();
        let p = Params::from_file(&path).unwrap();
        assert_eq!(p.req_str("experiment").unwrap(), "beta");
        assert_eq!(p.req_f64("alpha").unwrap(), -1.0);
    }

    #[test]
    fn defaults_mark_keys_as_consulted() {
        let p = Params::from_args(&args(&["h=10"])).unwrap();
        assert_eq!(p.f64_or("h", 1.0).unwrap(), 10.0);
        assert_eq!(p.f64_or("absent", 7.0).unwrap(), 7.0);
        p.finish().unwrap();
    }
}
