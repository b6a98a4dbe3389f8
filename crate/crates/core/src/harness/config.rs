//! Flat `key = value` configuration with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` preceded by
//! whitespace starts a trailing comment. Keys may not repeat within a file.
//! Every key must be consumed by the reader, so typos are reported.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("bad key `{k}`"),
                });
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(KeyValues {
            map,
            used: RefCell::default(),
        })
    }

    /// Sets or replaces `key` (command-line overrides).
    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v)
    }

    pub fn get_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Looks up `run.<name>.<key>`, then `<key>`.
    pub fn run_get(&self, run: &str, key: &str) -> Option<&str> {
        self.get(&format!("run.{run}.{key}")).or_else(|| self.get(key))
    }

    pub fn run_parse_opt<T: FromStr>(&self, run: &str, key: &str) -> Result<Option<T>> {
        let scoped = format!("run.{run}.{key}");
        match self.get(&scoped) {
            Some(v) => parse_value(&scoped, v).map(Some),
            None => self.parse_opt(key),
        }
    }

    /// Errors on any key that was never read.
    pub fn check_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .map
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes = line.as_bytes();
    for i in 1..bytes.len() {
        if bytes[i] == b'#' && bytes[i - 1].is_ascii_whitespace() {
            return &line[..i];
        }
    }
    line
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`")))
}

/// Splits a comma-separated list, dropping empty items.
pub fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_usage() {
        let kv = KeyValues::parse("# header\na = 1\nb.c = x y  # trailing\n\nrun.r1.a = 2\n").unwrap();
        assert_eq!(kv.parse_or::<u32>("a", 0).unwrap(), 1);
        assert_eq!(kv.get("b.c"), Some("x y"));
        assert_eq!(kv.run_parse_opt::<u32>("r1", "a").unwrap(), Some(2));
        assert_eq!(kv.run_parse_opt::<u32>("r2", "a").unwrap(), Some(1));
        kv.check_all_used().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(KeyValues::parse("a = 1\na = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KeyValues::parse("novalue"), Err(Error::Parse { line: 1, .. })));
        let kv = KeyValues::parse("a = 1\ntypo = 3").unwrap();
        kv.get("a");
        assert!(kv.check_all_used().is_err());
        assert!(kv.parse_opt::<u32>("typo").is_ok());
        let kv = KeyValues::parse("n = abc").unwrap();
        assert!(kv.parse_opt::<u32>("n").is_err());
    }

    #[test]
    fn hash_inside_value_is_kept() {
        let kv = KeyValues::parse("path = data#1.txt").unwrap();
        assert_eq!(kv.get("path"), Some("data#1.txt"));
    }
}
