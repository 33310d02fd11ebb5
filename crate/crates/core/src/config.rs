//! Plain-text `key=value` files used for spectra and experiment configs.
//!
//! Blank lines and `#` comments are ignored. A line that holds a bare
//! number (no `=`) is collected into [`KeyValueFile::bare_values`]; spectrum
//! files use this for explicit eigenvalue lists, one per line.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValueFile {
    entries: BTreeMap<String, String>,
    bare_values: Vec<f64>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = KeyValueFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((key, value)) => {
                    let key = key.trim();
                    if key.is_empty() {
                        return Err(LabError::Config(format!("line {}: empty key", lineno + 1)));
                    }
                    if out
                        .entries
                        .insert(key.to_string(), value.trim().to_string())
                        .is_some()
                    {
                        return Err(LabError::Config(format!(
                            "line {}: duplicate key `{key}`",
                            lineno + 1
                        )));
                    }
                }
                None => {
                    let v: f64 = line.parse().map_err(|_| {
                        LabError::Config(format!(
                            "line {}: expected `key=value` or a number, got `{line}`",
                            lineno + 1
                        ))
                    })?;
                    out.bare_values.push(v);
                }
            }
        }
        Ok(out)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            LabError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn bare_values(&self) -> &[f64] {
        &self.bare_values
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Required value; the error names the missing key.
    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => Err(LabError::Config(format!("missing key `{key}`"))),
        }
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| LabError::Config(format!("key `{key}`: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma- or whitespace-separated list.
    pub fn get_list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(raw) = self.entries.get(key) else {
            return Ok(None);
        };
        raw.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|e| {
                    LabError::Config(format!("key `{key}`: cannot parse list item `{s}`: {e}"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }
}
