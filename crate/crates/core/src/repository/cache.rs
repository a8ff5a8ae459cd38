use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::conceptualizer::conceptualize;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::{self, tokenize_pattern, Tokens};
use crate::translation::{DecodeConfig, TranslationModel};
use crate::trie::PatternTrie;

pub const DEFAULT_TOP_K: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub pattern: Tokens,
    pub score: f64,
}

/// One immutable generation of precomputed results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CacheSnapshot {
    pub generation: u64,
    entries: HashMap<Tokens, Vec<CacheEntry>>,
}

impl CacheSnapshot {
    pub fn new(generation: u64, entries: HashMap<Tokens, Vec<CacheEntry>>) -> Self {
        Self { generation, entries }
    }

    pub fn get(&self, query_pattern: &[String]) -> Option<&[CacheEntry]> {
        self.entries.get(query_pattern).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Query patterns, sorted.
    pub fn keys(&self) -> Vec<&Tokens> {
        let mut keys: Vec<&Tokens> = self.entries.keys().collect();
        keys.sort();
        keys
    }

    /// `query_pattern<TAB>target:score|target:score` under a generation header.
    pub fn to_tsv(&self) -> Result<String> {
        let mut out = format!("# generation={}\n", self.generation);
        for key in self.keys() {
            let ranked: Vec<String> = self.entries[key]
                .iter()
                .map(|e| format!("{}:{}", e.pattern.join(" "), e.score))
                .collect();
            if key
                .iter()
                .chain(self.entries[key].iter().flat_map(|e| e.pattern.iter()))
                .any(|t| t.contains('|'))
            {
                return Err(Error::Config(format!("cache pattern `{}` contains `|`", key.join(" "))));
            }
            let _ = writeln!(out, "{}\t{}", key.join(" "), ranked.join("|"));
        }
        Ok(out)
    }

    pub fn parse(contents: &str, file: &str) -> Result<Self> {
        let mut generation = 0;
        for (i, l) in contents.lines().enumerate() {
            if let Some(v) = l.strip_prefix("# generation=") {
                generation = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(file, i + 1, format!("invalid generation `{v}`")))?;
            }
        }
        let mut entries = HashMap::new();
        for (line, l) in text::data_lines(contents) {
            let (key, ranked) = l.split_once('\t').unwrap_or((l, ""));
            let mut list = Vec::new();
            for item in ranked.split('|').filter(|s| !s.is_empty()) {
                let (pat, score) = item
                    .rsplit_once(':')
                    .ok_or_else(|| Error::parse(file, line, format!("expected `pattern:score`, found `{item}`")))?;
                let score: f64 = score
                    .parse()
                    .map_err(|_| Error::parse(file, line, format!("invalid score `{score}`")))?;
                list.push(CacheEntry {
                    pattern: tokenize_pattern(pat),
                    score,
                });
            }
            entries.insert(tokenize_pattern(key), list);
        }
        Ok(Self { generation, entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&text::read_to_string(path)?, &text::file_label(path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        text::write_string(path, &self.to_tsv()?)
    }
}

/// Readers take a snapshot `Arc`; a rebuild replaces the whole snapshot at
/// once, so no reader ever sees a partially built cache.
#[derive(Debug, Default)]
pub struct LookupCache {
    current: RwLock<Arc<CacheSnapshot>>,
}

impl LookupCache {
    pub fn new(snapshot: CacheSnapshot) -> Self {
        Self {
            current: RwLock::new(Arc::new(snapshot)),
        }
    }

    pub fn snapshot(&self) -> Arc<CacheSnapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn generation(&self) -> u64 {
        self.snapshot().generation
    }

    /// Installs `next` and returns the replaced snapshot.
    pub fn swap(&self, next: CacheSnapshot) -> Arc<CacheSnapshot> {
        let mut guard = self.current.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, Arc::new(next))
    }
}

/// Top-`top_k` query patterns by frequency in `query_log` (ties by pattern
/// order), each decoded against the trie.
pub fn build_cache(
    query_log: &[Tokens],
    kb: &KnowledgeBase,
    model: &TranslationModel,
    trie: &PatternTrie,
    decode: &DecodeConfig,
    top_k: usize,
    generation: u64,
) -> CacheSnapshot {
    let patterns: Vec<Tokens> = query_log.par_iter().map(|q| conceptualize(q, kb).tokens()).collect();
    let mut freq: HashMap<Tokens, usize> = HashMap::new();
    for p in patterns {
        *freq.entry(p).or_default() += 1;
    }
    let mut ranked: Vec<(Tokens, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    let entries = ranked
        .into_par_iter()
        .map(|(p, _)| {
            let result = model.decode_constrained(&p, trie, decode);
            let list = result
                .candidates
                .into_iter()
                .map(|c| CacheEntry {
                    pattern: c.tokens,
                    score: c.score,
                })
                .collect();
            (p, list)
        })
        .collect();
    CacheSnapshot { generation, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let mut entries = HashMap::new();
        entries.insert(
            tokenize_pattern("how much [x] 10:30"),
            vec![
                CacheEntry {
                    pattern: tokenize_pattern("price [x]"),
                    score: -1.2345678901234567,
                },
                CacheEntry {
                    pattern: tokenize_pattern("[x] cost"),
                    score: -3.0,
                },
            ],
        );
        let snap = CacheSnapshot::new(4, entries);
        let back = CacheSnapshot::parse(&snap.to_tsv().unwrap(), "c").unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn swap_replaces_whole_snapshot() {
        let cache = LookupCache::default();
        let old = cache.snapshot();
        cache.swap(CacheSnapshot::new(1, HashMap::new()));
        assert_eq!(old.generation, 0);
        assert_eq!(cache.generation(), 1);
    }
}
