//! Query-to-keyword retrieval: conceptualize, retrieve keyword patterns
//! (lookup cache or trie-constrained decoding), instantiate with the query's
//! entities and aliases, join against the keyword set, expand by synonym
//! clusters.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::conceptualizer::{conceptualize, instantiate, Pattern, SlotValue};
use crate::kb::KnowledgeBase;
use crate::repository::{expand_clusters, join_filter, CacheEntry, CacheSnapshot, KeywordRepository, SynonymClusters};
use crate::text::{self, Tokens};
use crate::translation::{DecodeConfig, TranslationModel};
use crate::trie::PatternTrie;

pub const DEFAULT_MAX_CANDIDATES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchConfig {
    pub decode: DecodeConfig,
    pub use_cache: bool,
    /// Cap on the final ranked candidate list.
    pub max_candidates: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            decode: DecodeConfig::default(),
            use_cache: true,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Join,
    Cluster,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Join => "join",
            Stage::Cluster => "cluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPattern {
    pub pattern: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instantiation {
    pub pattern: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPattern {
    pub pattern: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedKeyword {
    pub keyword: String,
    pub score: f64,
    pub stage: Stage,
}

/// Microseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTiming {
    pub conceptualize_us: u64,
    pub retrieve_us: u64,
    pub instantiate_us: u64,
    pub join_us: u64,
    pub expand_us: u64,
}

/// Every intermediate of one retrieval. Each stage consumes exactly the
/// previous stage's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchTrace {
    pub query: String,
    pub query_pattern: String,
    pub slot_values: Vec<SlotValue>,
    pub cache: CacheStatus,
    pub retrieved: Vec<ScoredPattern>,
    pub instantiated: Vec<Instantiation>,
    pub skipped: Vec<SkippedPattern>,
    pub joined: Vec<String>,
    pub expanded: Vec<String>,
    pub candidates: Vec<RankedKeyword>,
    pub timing: StageTiming,
}

impl MatchTrace {
    /// Trace JSON without the timing block, for byte-exact comparison.
    pub fn golden_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("trace serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("trace serializes") + "\n"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }

    pub fn final_keywords(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.keyword.as_str()).collect()
    }
}

/// Immutable retrieval artifacts; cheap to share across threads.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'a> {
    pub kb: &'a KnowledgeBase,
    pub model: &'a TranslationModel,
    pub repo: &'a KeywordRepository,
    pub trie: &'a PatternTrie,
    pub clusters: &'a SynonymClusters,
}

impl Matcher<'_> {
    /// Always decodes; no cache involved.
    pub fn retrieve(&self, query: &[String], config: &MatchConfig) -> MatchTrace {
        self.run(query, None, config)
    }

    /// Uses `cache` for patterns it holds and decodes the rest.
    pub fn retrieve_online(&self, query: &[String], cache: &CacheSnapshot, config: &MatchConfig) -> MatchTrace {
        self.run(query, Some(cache), config)
    }

    fn run(&self, query: &[String], cache: Option<&CacheSnapshot>, config: &MatchConfig) -> MatchTrace {
        let mut timing = StageTiming::default();
        let t = Instant::now();
        let pattern = conceptualize(query, self.kb);
        let pattern_tokens = pattern.tokens();
        timing.conceptualize_us = micros(t);

        let t = Instant::now();
        let (status, retrieved): (CacheStatus, Vec<CacheEntry>) =
            match cache.filter(|_| config.use_cache).map(|c| c.get(&pattern_tokens)) {
                Some(Some(hit)) => (CacheStatus::Hit, hit.to_vec()),
                found => {
                    let status = if found.is_some() {
                        CacheStatus::Miss
                    } else {
                        CacheStatus::Disabled
                    };
                    let decoded = self
                        .model
                        .decode_constrained(&pattern_tokens, self.trie, &config.decode)
                        .candidates
                        .into_iter()
                        .map(|c| CacheEntry {
                            pattern: c.tokens,
                            score: c.score,
                        })
                        .collect();
                    (status, decoded)
                }
            };
        timing.retrieve_us = micros(t);

        let t = Instant::now();
        let mut instantiated = Vec::new();
        let mut skipped = Vec::new();
        let mut sentence_scores: Vec<(Tokens, f64)> = Vec::new();
        for entry in &retrieved {
            let target = Pattern::from_tokens(&entry.pattern);
            match self.bind(&pattern, &target) {
                Ok(bindings) => match instantiate(&target, &bindings) {
                    Ok(sentences) => {
                        for s in sentences {
                            instantiated.push(Instantiation {
                                pattern: text::join(&entry.pattern),
                                sentence: text::join(&s),
                            });
                            sentence_scores.push((s, entry.score));
                        }
                    }
                    Err(e) => skipped.push(SkippedPattern {
                        pattern: text::join(&entry.pattern),
                        reason: e.to_string(),
                    }),
                },
                Err(reason) => skipped.push(SkippedPattern {
                    pattern: text::join(&entry.pattern),
                    reason,
                }),
            }
        }
        timing.instantiate_us = micros(t);

        let t = Instant::now();
        let sentences: Vec<Tokens> = sentence_scores.iter().map(|(s, _)| s.clone()).collect();
        let joined = join_filter(&sentences, self.repo);
        timing.join_us = micros(t);

        let t = Instant::now();
        let expanded = expand_clusters(&joined, self.clusters);
        // first occurrence carries the best score since retrieval is sorted
        let mut best: HashMap<&Tokens, f64> = HashMap::new();
        for (s, score) in &sentence_scores {
            best.entry(s).or_insert(*score);
        }
        let mut ranked: Vec<RankedKeyword> = joined
            .iter()
            .map(|k| RankedKeyword {
                keyword: text::join(k),
                score: best[k],
                stage: Stage::Join,
            })
            .collect();
        let mut inherited: HashMap<&Tokens, f64> = HashMap::new();
        for k in &joined {
            for m in self.clusters.members_of(k) {
                inherited.entry(m).or_insert(best[k]);
            }
        }
        ranked.extend(expanded[joined.len()..].iter().map(|k| RankedKeyword {
            keyword: text::join(k),
            score: inherited[k],
            stage: Stage::Cluster,
        }));
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.stage.cmp(&b.stage)));
        ranked.truncate(config.max_candidates);
        timing.expand_us = micros(t);

        MatchTrace {
            query: text::join(query),
            query_pattern: pattern.render(),
            slot_values: pattern.slot_values.clone(),
            cache: status,
            retrieved: retrieved
                .iter()
                .map(|e| ScoredPattern {
                    pattern: text::join(&e.pattern),
                    score: e.score,
                })
                .collect(),
            instantiated,
            skipped,
            joined: joined.iter().map(|k| text::join(k)).collect(),
            expanded: expanded.iter().map(|k| text::join(k)).collect(),
            candidates: ranked,
            timing,
        }
    }

    /// The k-th target slot of concept c takes the surfaces of the entity in
    /// the query's k-th slot of concept c.
    fn bind(&self, query: &Pattern, target: &Pattern) -> Result<Vec<Vec<Tokens>>, String> {
        target
            .slots()
            .map(|(concept, occurrence)| {
                let value = query
                    .slot_values
                    .iter()
                    .filter(|v| v.concept == concept)
                    .nth(occurrence - 1)
                    .ok_or_else(|| format!("query has no slot {occurrence} of concept `{concept}`"))?;
                self.kb.aliases_of(&value.entity_id).map_err(|e| e.to_string())
            })
            .collect()
    }
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

#[allow(clippy::too_many_arguments)]
pub fn retrieve(
    query: &[String],
    kb: &KnowledgeBase,
    model: &TranslationModel,
    repo: &KeywordRepository,
    trie: &PatternTrie,
    clusters: &SynonymClusters,
    config: &MatchConfig,
) -> MatchTrace {
    Matcher {
        kb,
        model,
        repo,
        trie,
        clusters,
    }
    .retrieve(query, config)
}

/// Batch output line: `query<TAB>keyword<TAB>decoder_score<TAB>stage`.
pub fn candidates_tsv(trace: &MatchTrace) -> String {
    trace
        .candidates
        .iter()
        .map(|c| format!("{}\t{}\t{}\t{}\n", trace.query, c.keyword, c.score, c.stage.as_str()))
        .collect()
}
