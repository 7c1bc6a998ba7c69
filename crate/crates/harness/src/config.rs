use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// `key = value` settings with `#` comments. Every key must be read before
/// [`KeyValues::finish`], which rejects typos.
#[derive(Debug, Default)]
pub struct KeyValues {
    name: String,
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl KeyValues {
    pub fn parse_str(text: &str, name: &str) -> Result<Self> {
        let mut kv = KeyValues {
            name: name.to_string(),
            ..Default::default()
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: name.to_string(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(err("empty key".into()));
            }
            if kv.entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(err(format!("duplicate key {k:?}")));
            }
        }
        Ok(kv)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Adds or replaces a value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn error(&self, key: &str, message: String) -> Error {
        Error::Config {
            path: self.name.clone(),
            line: self.entries.get(key).map_or(0, |e| e.0),
            message: format!("{key}: {message}"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| self.error(key, "missing required key".into()))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        if v.is_empty() {
            return Ok(Some(Vec::new()));
        }
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|e| self.error(key, format!("cannot parse list item {item:?}: {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        Ok(self.list(key)?.unwrap_or(default))
    }

    /// Fails on keys nobody asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(self.error(k, "unknown key".into())),
            None => Ok(()),
        }
    }
}
