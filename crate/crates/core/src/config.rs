//! Flat sectioned key-value configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value   # trailing comment
//! ```
//!
//! Section and key names are `[A-Za-z0-9_.-]+`. Duplicate sections, duplicate
//! keys, keys outside a section and keys or sections left unread by the
//! consumer are errors carrying the 1-based line number.

use std::collections::BTreeMap;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    sections: BTreeMap<String, Section>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(n, "unterminated section header"))?
                .trim();
            if !valid_name(name) {
                return Err(err(n, format!("invalid section name '{name}'")));
            }
            if let Some(prev) = sections.get(name) {
                return Err(err(
                    n,
                    format!("duplicate section [{name}] (first on line {})", prev.line),
                ));
            }
            sections.insert(
                name.to_string(),
                Section {
                    name: name.to_string(),
                    line: n,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, "expected 'key = value' or '[section]'"))?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_name(key) {
            return Err(err(n, format!("invalid key '{key}'")));
        }
        let section = current
            .as_ref()
            .and_then(|c| sections.get_mut(c))
            .ok_or_else(|| err(n, format!("key '{key}' outside of any section")))?;
        if let Some(prev) = section.entries.get(key) {
            return Err(err(
                n,
                format!("duplicate key '{key}' (first on line {})", prev.line),
            ));
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: n,
            },
        );
    }
    Ok(Config { sections })
}

impl Config {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    /// Removes a section for consumption.
    pub fn take(&mut self, name: &str) -> Option<Reader> {
        self.sections.remove(name).map(Reader::new)
    }

    /// Like [`Config::take`] but yields an empty reader when absent.
    pub fn take_or_empty(&mut self, name: &str) -> Reader {
        self.take(name).unwrap_or_else(|| {
            Reader::new(Section {
                name: name.to_string(),
                line: 0,
                entries: BTreeMap::new(),
            })
        })
    }

    pub fn require(&mut self, name: &str) -> Result<Reader> {
        self.take(name)
            .ok_or_else(|| err(0, format!("missing required section [{name}]")))
    }

    /// Removes and returns every section whose name starts with `prefix`, in
    /// name order.
    pub fn take_prefixed(&mut self, prefix: &str) -> Vec<Reader> {
        let names: Vec<String> = self
            .sections
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect();
        names
            .iter()
            .filter_map(|n| self.sections.remove(n))
            .map(Reader::new)
            .collect()
    }

    /// Fails on the first section nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.sections.values().min_by_key(|s| s.line) {
            Some(s) => Err(err(s.line, format!("unknown section [{}]", s.name))),
            None => Ok(()),
        }
    }
}

/// Typed, consuming access to one section.
#[derive(Debug)]
pub struct Reader {
    section: Section,
}

impl Reader {
    fn new(section: Section) -> Self {
        Self { section }
    }

    pub fn name(&self) -> &str {
        &self.section.name
    }

    pub fn line(&self) -> usize {
        self.section.line
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.section.entries.remove(key)
    }

    fn missing(&self, key: &str) -> Error {
        err(
            self.section.line,
            format!("[{}] missing required key '{key}'", self.section.name),
        )
    }

    pub fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|e| e.value)
    }

    pub fn require_string(&mut self, key: &str) -> Result<String> {
        self.string(key).ok_or_else(|| self.missing(key))
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(e.line, format!("'{key}': expected a finite number, got '{}'", e.value)))
            })
            .transpose()
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    /// Angle given in degrees, returned in radians.
    pub fn angle_or(&mut self, key: &str, default_rad: f64) -> Result<f64> {
        Ok(self.f64(key)?.map(f64::to_radians).unwrap_or(default_rad))
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        self.take(key)
            .map(|e| {
                e.value
                    .parse::<u64>()
                    .map_err(|_| err(e.line, format!("'{key}': expected an unsigned integer, got '{}'", e.value)))
            })
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.u64_or(key, default as u64)?;
        usize::try_from(v).map_err(|_| err(self.section.line, format!("'{key}' too large")))
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        self.take(key)
            .map(|e| match e.value.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                other => Err(err(e.line, format!("'{key}': expected a boolean, got '{other}'"))),
            })
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    /// Comma-separated numbers.
    pub fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(e.line, format!("'{key}': invalid number '{}'", s.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .transpose()
    }

    /// Comma-separated tuples whose fields are separated by `:`, each with
    /// exactly `arity` numbers.
    pub fn tuples(&mut self, key: &str, arity: usize) -> Result<Option<Vec<Vec<f64>>>> {
        self.take(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|item| {
                        let nums: Vec<f64> = item
                            .split(':')
                            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                            .collect::<Option<Vec<f64>>>()
                            .ok_or_else(|| err(e.line, format!("'{key}': invalid entry '{}'", item.trim())))?;
                        if nums.len() != arity {
                            return Err(err(
                                e.line,
                                format!("'{key}': entry '{}' needs {arity} fields", item.trim()),
                            ));
                        }
                        Ok(nums)
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()
            })
            .transpose()
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.section.entries.iter().min_by_key(|(_, e)| e.line) {
            Some((k, e)) => Err(err(e.line, format!("[{}] unknown key '{k}'", self.section.name))),
            None => Ok(()),
        }
    }
}
