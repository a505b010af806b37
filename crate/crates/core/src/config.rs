//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| Error::Config(format!("key '{key}': bad value '{v}': {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e| Error::Config(format!("key '{key}': bad item '{s}': {e}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Entries whose key starts with `prefix`, with the prefix stripped.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
            .map(move |(k, v)| (&k[prefix.len()..], v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_lists_and_prefixes() {
        let c = KvConfig::parse("# world\nseed = 7\nd_grid = 5, 10,25\nperiod.gps = 1000\nperiod.light=200 # fast\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.get_list::<usize>("d_grid").unwrap(), Some(vec![5, 10, 25]));
        let p: Vec<_> = c.with_prefix("period.").collect();
        assert_eq!(p, vec![("gps", "1000"), ("light", "200")]);
        assert_eq!(c.get_or::<u32>("missing", 3).unwrap(), 3);
        assert!(c.get::<u64>("d_grid").is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(KvConfig::parse("novalue\n").is_err());
        assert!(KvConfig::parse("a=1\na=2\n").is_err());
        assert!(KvConfig::parse(" = 3\n").is_err());
    }
}
