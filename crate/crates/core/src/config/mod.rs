//! Flat key-value text with `[section]` headers, used for the constants
//! file, experiment specs and run manifests.
//!
//! ```text
//! # comment
//! version = 1
//! [solver]
//! time_steps = 512
//! ```

pub mod sections;

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {}: unterminated section header", lineno + 1))
                })?;
                current = name.trim().to_string();
                doc.section_mut(&current);
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if doc.get(&current, k).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            doc.set(&current, k, v);
        }
        Ok(doc)
    }

    fn section_mut(&mut self, name: &str) -> &mut Vec<(String, String)> {
        let pos = match self.sections.iter().position(|(s, _)| s == name) {
            Some(p) => p,
            None => {
                self.sections.push((name.to_string(), Vec::new()));
                self.sections.len() - 1
            }
        };
        &mut self.sections[pos].1
    }

    /// Sets `key` in `section` (the empty string is the top level),
    /// replacing any previous value.
    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        let value = value.to_string();
        let sec = self.section_mut(section);
        match sec.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => sec.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .and_then(|(_, kv)| kv.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("[{section}] {key}: `{v}` is not a number")))
            })
            .transpose()
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &[(String, String)])> {
        self.sections.iter().map(|(s, kv)| (s.as_str(), kv.as_slice()))
    }

    pub fn keys(&self, section: &str) -> Vec<&str> {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .map(|(_, kv)| kv.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default()
    }

    /// Copies every entry of `other` over this document.
    pub fn merge(&mut self, other: &KvDoc) {
        for (s, kv) in &other.sections {
            for (k, v) in kv {
                self.set(s, k, v);
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (s, kv)) in self.sections.iter().enumerate() {
            if !s.is_empty() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{s}]");
            }
            for (k, v) in kv {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# header\nversion = 2\n\n[solver]\ntime_steps = 512 # per horizon\nrule = product_rectangle\n[grid]\nn = 64\n";
        let doc = KvDoc::parse(text).unwrap();
        assert_eq!(doc.get("", "version"), Some("2"));
        assert_eq!(doc.get("solver", "time_steps"), Some("512"));
        assert_eq!(doc.get_f64("grid", "n").unwrap(), Some(64.0));
        assert_eq!(KvDoc::parse(&doc.render()).unwrap(), doc);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KvDoc::parse("[open\n").is_err());
        assert!(KvDoc::parse("novalue\n").is_err());
        assert!(KvDoc::parse("a = 1\na = 2\n").is_err());
        assert!(KvDoc::parse("x = abc").unwrap().get_f64("", "x").is_err());
    }
}
