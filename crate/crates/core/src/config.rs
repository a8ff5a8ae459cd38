//! Flat `key=value` configuration files. Blank lines and `#` comments are
//! ignored; later keys override earlier ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    file: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(contents: &str, file: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (line, raw) in text::data_lines(contents) {
            let (k, v) = raw
                .split_once('=')
                .ok_or_else(|| Error::parse(file, line, "expected `key=value`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(file, line, "empty key"));
            }
            entries.insert(k.to_string(), (line, v.trim().to_string()));
        }
        Ok(Self {
            file: file.to_string(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&text::read_to_string(path)?, &text::file_label(path))
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(&self.file, *line, format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|p| p.trim())
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse()
                        .map_err(|_| Error::parse(&self.file, *line, format!("invalid list item `{p}` for `{key}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(Error::parse(&self.file, *line, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_lists() {
        let kv = KeyValues::parse("# c\nbeam = 50\nprops=0.08, 0.1\n", "t").unwrap();
        assert_eq!(kv.get::<usize>("beam").unwrap(), Some(50));
        assert_eq!(kv.get_list::<f64>("props").unwrap(), Some(vec![0.08, 0.1]));
        assert_eq!(kv.get_or("missing", 3usize).unwrap(), 3);
    }

    #[test]
    fn reports_line_numbers() {
        let err = KeyValues::parse("a=1\n\nnonsense\n", "cfg").unwrap_err();
        assert_eq!(err.to_string(), "cfg:3: expected `key=value`");
        let kv = KeyValues::parse("a=x\n", "cfg").unwrap();
        assert!(kv.get::<u32>("a").unwrap_err().to_string().starts_with("cfg:1:"));
        assert!(kv.check_keys(&["b"]).is_err());
    }
}
