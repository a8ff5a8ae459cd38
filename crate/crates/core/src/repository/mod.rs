//! Keyword inventory: the exact keyword set, its conceptualized pattern
//! repository with a prefix trie, synonym clusters and the frequent-pattern
//! lookup cache.

mod cache;
mod clusters;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

pub use crate::trie::PatternTrie;
pub use cache::{build_cache, CacheEntry, CacheSnapshot, LookupCache, DEFAULT_TOP_K};
pub use clusters::{build_clusters, read_keyword_pairs, ClusterBuild, SynonymClusters};

use crate::conceptualizer::conceptualize;
use crate::error::Result;
use crate::kb::KnowledgeBase;
use crate::text::{self, tokenize, Tokens};

#[derive(Debug, Clone, Default)]
pub struct KeywordRepository {
    /// First-seen order, deduplicated.
    keywords: Vec<Tokens>,
    members: HashSet<Tokens>,
    pattern_index: BTreeMap<Tokens, BTreeSet<Tokens>>,
}

impl KeywordRepository {
    pub fn build<I>(keywords: I, kb: &KnowledgeBase) -> Self
    where
        I: IntoIterator<Item = Tokens>,
    {
        let mut repo = Self::default();
        for kw in keywords {
            if kw.is_empty() || repo.members.contains(&kw) {
                continue;
            }
            let pattern = conceptualize(&kw, kb).tokens();
            repo.pattern_index.entry(pattern).or_default().insert(kw.clone());
            repo.members.insert(kw.clone());
            repo.keywords.push(kw);
        }
        repo
    }

    pub fn contains(&self, keyword: &[String]) -> bool {
        self.members.contains(keyword)
    }

    pub fn keywords(&self) -> &[Tokens] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Rendered pattern tokens, sorted.
    pub fn patterns(&self) -> impl Iterator<Item = &Tokens> {
        self.pattern_index.keys()
    }

    pub fn pattern_count(&self) -> usize {
        self.pattern_index.len()
    }

    pub fn keywords_for_pattern(&self, pattern: &[String]) -> Option<&BTreeSet<Tokens>> {
        self.pattern_index.get(pattern)
    }

    pub fn trie(&self) -> PatternTrie {
        PatternTrie::from_patterns(self.pattern_index.keys())
    }

    pub fn keywords_txt(&self) -> String {
        self.keywords.iter().map(|k| text::join(k) + "\n").collect()
    }
}

pub fn parse_keywords(contents: &str) -> Vec<Tokens> {
    text::data_lines(contents)
        .map(|(_, l)| tokenize(l))
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn read_keywords(path: &Path) -> Result<Vec<Tokens>> {
    Ok(parse_keywords(&text::read_to_string(path)?))
}

pub fn build_repository(keywords_file: &Path, kb: &KnowledgeBase) -> Result<(KeywordRepository, PatternTrie)> {
    let repo = KeywordRepository::build(read_keywords(keywords_file)?, kb);
    let trie = repo.trie();
    Ok((repo, trie))
}

/// Candidates present in the keyword set, input order, first occurrence only.
pub fn join_filter(candidates: &[Tokens], repo: &KeywordRepository) -> Vec<Tokens> {
    let mut seen = HashSet::new();
    candidates
        .iter()
        .filter(|c| repo.contains(c) && seen.insert(*c))
        .cloned()
        .collect()
}

/// Input keywords (deduplicated, in order) followed by the remaining members
/// of their clusters, cluster by cluster in input order, members sorted.
pub fn expand_clusters(keywords: &[Tokens], clusters: &SynonymClusters) -> Vec<Tokens> {
    let mut seen: HashSet<&Tokens> = HashSet::new();
    let mut out: Vec<Tokens> = Vec::new();
    for k in keywords {
        if seen.insert(k) {
            out.push(k.clone());
        }
    }
    for k in keywords {
        for m in clusters.members_of(k) {
            if seen.insert(m) {
                out.push(m.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{ConceptTaxonomy, EntityLexicon};

    fn kb() -> KnowledgeBase {
        let t = ConceptTaxonomy::parse("aesthetic_surgery\t-\t1\nlocation\t-\t1\n", "t").unwrap();
        let l = EntityLexicon::parse(
            "lipo_e\tliposuction\taesthetic_surgery\tlipo\nny\tnew york\tlocation\t\nla\tlos angeles\tlocation\t\n",
            "e",
            &t,
        )
        .unwrap();
        KnowledgeBase::new(t, l).unwrap()
    }

    #[test]
    fn pattern_index_groups_keywords() {
        let kws = vec![
            tokenize("the price of liposuction in new york"),
            tokenize("the price of lipo in los angeles"),
            tokenize("the price of liposuction in new york"),
        ];
        let repo = KeywordRepository::build(kws, &kb());
        assert_eq!(repo.len(), 2);
        assert_eq!(repo.pattern_count(), 1);
        let p = tokenize("the price of [aesthetic_surgery] in [location]");
        let p: Tokens = text::tokenize_pattern(&p.join(" "));
        assert_eq!(repo.keywords_for_pattern(&p).map(|s| s.len()), Some(2));
        assert!(repo.trie().contains(&p));
    }

    #[test]
    fn empty_repository() {
        let repo = KeywordRepository::build(Vec::new(), &kb());
        assert!(repo.is_empty());
        assert!(repo.trie().is_empty());
    }

    #[test]
    fn join_keeps_members_in_order() {
        let repo = KeywordRepository::build(vec![tokenize("b"), tokenize("a")], &kb());
        let c = vec![tokenize("a"), tokenize("z"), tokenize("b"), tokenize("a")];
        assert_eq!(join_filter(&c, &repo), vec![tokenize("a"), tokenize("b")]);
        assert!(join_filter(&[], &repo).is_empty());
    }
}
