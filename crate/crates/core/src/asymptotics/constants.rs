//! Empirical constants for the O-terms, kept in a versioned key=value file.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{FptError, Result};

const EMBEDDED: &str = include_str!("constants.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct OConstants {
    pub version: u32,
    values: BTreeMap<String, f64>,
}

impl OConstants {
    /// Parses `key = value` lines; `#` starts a comment. A `version` key is
    /// required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut version = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                FptError::InvalidConfig(format!(
                    "constants line {}: expected key = value",
                    lineno + 1
                ))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "version" {
                version = Some(v.parse::<u32>().map_err(|e| {
                    FptError::InvalidConfig(format!("constants version '{v}': {e}"))
                })?);
                continue;
            }
            let x: f64 = v
                .parse()
                .map_err(|e| FptError::InvalidConfig(format!("constant {k} = '{v}': {e}")))?;
            if !(x >= 0.0) || !x.is_finite() {
                return Err(FptError::InvalidConfig(format!(
                    "constant {k} must be finite and >= 0"
                )));
            }
            values.insert(k.to_string(), x);
        }
        let version = version
            .ok_or_else(|| FptError::InvalidConfig("constants file lacks a version".into()))?;
        Ok(OConstants { version, values })
    }

    /// The constants shipped with the library.
    pub fn embedded() -> &'static OConstants {
        static CELL: OnceLock<OConstants> = OnceLock::new();
        CELL.get_or_init(|| OConstants::parse(EMBEDDED).expect("embedded constants file is valid"))
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("version = {}\n", self.version);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v:e}\n"));
        }
        s
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_parses() {
        let c = OConstants::embedded();
        assert!(c.version >= 1);
        for k in [
            "thm2.nu_lt_1",
            "thm2.nu_eq_1",
            "thm2.nu_gt_1",
            "prop2.nu_lt_1",
            "envelope",
        ] {
            assert!(c.get(k).is_some(), "missing {k}");
        }
    }

    #[test]
    fn round_trip() {
        let c = OConstants::parse("version = 3\n# note\na.b = 1.5 # trailing\n").unwrap();
        assert_eq!(c.version, 3);
        assert_eq!(c.get("a.b"), Some(1.5));
        assert_eq!(OConstants::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(OConstants::parse("a = 1").is_err());
        assert!(OConstants::parse("version = 1\na").is_err());
        assert!(OConstants::parse("version = 1\na = -2").is_err());
    }
}
