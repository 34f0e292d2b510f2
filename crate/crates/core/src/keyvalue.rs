//! `key = value` files with `#` comments, shared by card, oracle and clamp configs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::units::{parse_si, NumberError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeyValueError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {source}")]
    Number { line: usize, source: NumberError },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
    },
}

/// Parsed entries with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    /// Parses text and rejects any key not in `allowed`.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, KeyValueError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(KeyValueError::Syntax { line })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(KeyValueError::Syntax { line });
            }
            if !allowed.contains(&key.as_str()) {
                return Err(KeyValueError::UnknownKey { line, key });
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(KeyValueError::Duplicate { line, key });
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, KeyValueError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => parse_si(v)
                .map(Some)
                .map_err(|source| KeyValueError::Number {
                    line: *line,
                    source,
                }),
        }
    }

    pub fn length_nm(&self, key: &str) -> Result<Option<f64>, KeyValueError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => crate::units::parse_length_nm(v)
                .map(Some)
                .map_err(|source| KeyValueError::Number {
                    line: *line,
                    source,
                }),
        }
    }

    pub fn count(&self, key: &str) -> Result<Option<u32>, KeyValueError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse::<u32>()
                    .map(Some)
                    .map_err(|_| KeyValueError::InvalidValue {
                        line: *line,
                        key: key.to_string(),
                        value: v.clone(),
                    })
            }
        }
    }
}
