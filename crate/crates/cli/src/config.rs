//! `key = value` configuration files. Flags override file values, which
//! override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag`, else the parsed config entry, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| format!("config key '{key}': {e}"))
            })
            .transpose()
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, String> {
        if flag {
            return Ok(true);
        }
        Ok(self.pick(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let c =
            Config::parse("# comment\nseed = 7\ngs_terms=12 # trailing\n\npaths = x\n").unwrap();
        assert_eq!(c.pick::<u64>(None, "seed").unwrap(), Some(7));
        assert_eq!(c.pick::<u64>(Some(3), "seed").unwrap(), Some(3));
        assert_eq!(c.pick::<usize>(None, "gs-terms").unwrap(), Some(12));
        assert_eq!(c.pick::<u64>(None, "missing").unwrap(), None);
        assert!(c.pick::<u64>(None, "paths").is_err());
        assert!(Config::parse("novalue").is_err());
    }
}
