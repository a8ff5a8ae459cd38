//! Token-level text helpers. Input is always whitespace tokenized and case
//! folded; nothing in the crate segments raw text.

use std::path::Path;

use crate::error::{Error, Result};

pub type Tokens = Vec<String>;

pub fn tokenize(text: &str) -> Tokens {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Pattern text keeps `[concept]` placeholders verbatim; everything else is
/// folded like ordinary text.
pub fn tokenize_pattern(text: &str) -> Tokens {
    text.split_whitespace()
        .map(|t| {
            if t.starts_with('[') && t.ends_with(']') {
                t.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .collect()
}

pub fn join(tokens: &[String]) -> String {
    tokens.join(" ")
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Iterates `(line_number, line)` over non-blank, non-comment lines.
pub fn data_lines(contents: &str) -> impl Iterator<Item = (usize, &str)> {
    contents
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub(crate) fn file_label(path: &Path) -> String {
    path.display().to_string()
}

/// Identifiers end up inside rendered patterns and slot-value columns, so the
/// characters those formats use as delimiters are not allowed.
pub(crate) fn valid_identifier(id: &str) -> bool {
    !id.is_empty()
        && !id
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ':' | ';' | '|' | '[' | ']'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_folds_case_and_whitespace() {
        assert_eq!(tokenize("  How much\tDoes  "), vec!["how", "much", "does"]);
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn identifiers_reject_delimiters() {
        assert!(valid_identifier("aesthetic_surgery"));
        assert!(!valid_identifier("a:b"));
        assert!(!valid_identifier("a b"));
        assert!(!valid_identifier(""));
    }
}
