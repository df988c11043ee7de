//! Curated token blacklist: loading, matching, counting.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::corpus::{tokenize, TokenSeq};
use crate::error::{Error, Result};

/// A set of normalized single-token entries.
///
/// Every entry is exactly what [`tokenize`] would produce for it, so matching
/// tokenized text against the set is consistent by construction. Matching is
/// exact membership: no regexes, no fuzzy matching, no leetspeak decoding.
#[derive(Debug, Clone)]
pub struct Blacklist {
    entries: HashSet<String>,
    source_path: String,
}

impl Blacklist {
    /// Build from raw entry strings, normalizing each through [`tokenize`].
    /// A line that normalizes to anything other than exactly one token is
    /// rejected; `line_base` offsets the line numbers in error messages.
    pub fn from_entries<'a>(
        raw_entries: impl IntoIterator<Item = (usize, &'a str)>,
        source_path: &str,
    ) -> Result<Self> {
        let mut entries = HashSet::new();
        for (line_no, raw) in raw_entries {
            let toks = tokenize(raw);
            match toks.len() {
                1 => {
                    entries.insert(toks.tokens()[0].clone());
                }
                0 => {
                    return Err(Error::data(format!(
                        "{source_path}:{line_no}: blacklist entry `{raw}` normalizes to no token"
                    )))
                }
                _ => {
                    return Err(Error::data(format!(
                        "{source_path}:{line_no}: blacklist entry `{raw}` is multi-token; \
                         entries must be single words"
                    )))
                }
            }
        }
        if entries.is_empty() {
            return Err(Error::data(format!(
                "{source_path}: blacklist is empty after comments and blank lines"
            )));
        }
        Ok(Blacklist {
            entries,
            source_path: source_path.to_owned(),
        })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }
}

/// Load a blacklist file: UTF-8, one entry per line, `#` comments and blank
/// lines ignored. Fails on an unreadable path, an empty effective list, or
/// any entry that is not a single token.
pub fn load_blacklist(path: impl AsRef<Path>) -> Result<Blacklist> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw = content
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'));
    Blacklist::from_entries(raw, &path.display().to_string())
}

/// Number of token positions (occurrences, not distinct types) that are
/// blacklist entries.
pub fn count_matches(tokens: &TokenSeq, bl: &Blacklist) -> u64 {
    tokens.iter().filter(|t| bl.contains(t)).count() as u64
}

/// Whether any token is a blacklist entry; equivalent to `count_matches > 0`.
pub fn contains_match(tokens: &TokenSeq, bl: &Blacklist) -> bool {
    tokens.iter().any(|t| bl.contains(t))
}
