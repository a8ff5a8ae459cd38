//! Shared fixtures and brute-force oracles for the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use conceptmatch::discriminator::{FeatureVector, DENSE_DIM, FEATURE_DIM};
use conceptmatch::kb::{ConceptTaxonomy, EntityLexicon};
use conceptmatch::matcher::Matcher;
use conceptmatch::repository::{build_clusters, read_keyword_pairs, read_keywords, KeywordRepository, SynonymClusters};
use conceptmatch::translation::{FeatureWeights, PhraseOption};
use conceptmatch::{tokenize, Candidate, KnowledgeBase, PatternTrie, Tokens, TranslationModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fig2_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/fig2")
}

pub const FIG2_QUERY: &str = "how much does liposuction cost in new york";

pub struct Fig2 {
    pub kb: KnowledgeBase,
    pub model: TranslationModel,
    pub repo: KeywordRepository,
    pub trie: PatternTrie,
    pub clusters: SynonymClusters,
}

impl Fig2 {
    pub fn load() -> Self {
        let dir = fig2_dir();
        let kb = KnowledgeBase::load_dir(&dir.join("kb")).expect("fixture kb");
        let model = TranslationModel::load(&dir.join("model")).expect("fixture model");
        let keywords = read_keywords(&dir.join("keywords.txt")).expect("fixture keywords");
        let repo = KeywordRepository::build(keywords, &kb);
        let trie = repo.trie();
        let pairs = read_keyword_pairs(&dir.join("k2k-pairs.tsv")).expect("fixture pairs");
        let clusters = build_clusters(&pairs, &repo).clusters;
        Self {
            kb,
            model,
            repo,
            trie,
            clusters,
        }
    }

    pub fn matcher(&self) -> Matcher<'_> {
        Matcher {
            kb: &self.kb,
            model: &self.model,
            repo: &self.repo,
            trie: &self.trie,
            clusters: &self.clusters,
        }
    }
}

pub fn toks(s: &str) -> Tokens {
    tokenize(s)
}

/// KB with `aesthetic_surgery` and `location` as core concepts and a
/// non-core `brand_word`.
pub fn small_kb() -> KnowledgeBase {
    let taxonomy = ConceptTaxonomy::parse(
        "aesthetic_surgery\t-\t1\n\
         eye_plastic\taesthetic_surgery\t0\n\
         body_contouring\taesthetic_surgery\t0\n\
         location\t-\t1\n\
         city\tlocation\t0\n\
         brand_word\t-\t0\n",
        "taxonomy.tsv",
    )
    .unwrap();
    let lexicon = EntityLexicon::parse(
        "liposuction\tliposuction\tbody_contouring\tlipo\n\
         rhinoplasty\trhinoplasty\taesthetic_surgery\tnose job\n\
         dbl_eyelid\tdouble eyelid surgery\teye_plastic\tdouble-fold eyelid operation\n\
         new_york\tnew york\tcity\tnyc\n\
         new_york_city\tnew york city\tcity\n\
         denver\tdenver\tcity\n\
         los_angeles\tlos angeles\tcity\tla\n\
         acme\tacme\tbrand_word\n",
        "entities.tsv",
        &taxonomy,
    )
    .unwrap();
    KnowledgeBase::new(taxonomy, lexicon).unwrap()
}

/// Hand-specified model; `entries` are `(source, target, p_fwd, p_rev)`.
pub fn table_model(entries: &[(&str, &str, f64, f64)], lm_corpus: &[&str], ngram: usize) -> TranslationModel {
    let entries: Vec<(Tokens, Tokens, f64, f64)> =
        entries.iter().map(|(s, t, f, r)| (toks(s), toks(t), *f, *r)).collect();
    let corpus: Vec<Tokens> = lm_corpus.iter().map(|s| toks(s)).collect();
    conceptmatch::translation::model_from_table(&entries, &corpus, ngram, FeatureWeights::default())
}

/// Exhaustive decoding: every segmentation of `source` into spans of at most
/// `max_phrase_len` tokens and every option per span. Single-token spans
/// with no entry copy the token. Keeps the best score per output sequence,
/// optionally restricted to `trie` members, sorted by descending score then
/// ascending tokens, truncated to `k`.
pub fn brute_force_decode(
    model: &TranslationModel,
    source: &[String],
    trie: Option<&PatternTrie>,
    k: usize,
) -> Vec<(Tokens, f64)> {
    let mut table: HashMap<Tokens, Vec<(Tokens, f64, f64)>> = HashMap::new();
    for (s, t, f, r) in model.phrase_entries() {
        table.entry(s).or_default().push((t, f, r));
    }
    let w = model.weights;
    let mut best: HashMap<Tokens, f64> = HashMap::new();
    let mut stack: Vec<(usize, Tokens, f64)> = vec![(0, Vec::new(), 0.0)];
    while let Some((i, out, tm)) = stack.pop() {
        if i == source.len() {
            if trie.is_some_and(|t| !t.contains(&out)) {
                continue;
            }
            let score = tm + w.lm * model.lm_logprob(&out);
            let e = best.entry(out).or_insert(f64::NEG_INFINITY);
            if score > *e {
                *e = score;
            }
            continue;
        }
        for j in i + 1..=source.len().min(i + model.max_phrase_len.max(1)) {
            let span = source[i..j].to_vec();
            let mut opts: Vec<(Tokens, f64, f64)> = table.get(&span).cloned().unwrap_or_default();
            if j == i + 1 && opts.is_empty() {
                opts.push((span.clone(), (-10.0f64).exp(), 1.0));
            }
            for (t, f, r) in opts {
                let cost = w.tm_fwd * f.ln() + w.tm_rev * r.ln() + w.word_penalty * t.len() as f64;
                let mut next = out.clone();
                next.extend(t);
                stack.push((j, next, tm + cost));
            }
        }
    }
    let mut ranked: Vec<(Tokens, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// Scores agree rank by rank with exhaustive decoding, and every returned
/// sequence carries its exact best score. Sequences whose scores differ only
/// by rounding may swap places.
pub fn check_against_oracle(
    model: &TranslationModel,
    source: &[String],
    trie: Option<&PatternTrie>,
    got: &[Candidate],
    k: usize,
) -> Result<(), String> {
    let all: HashMap<Tokens, f64> = brute_force_decode(model, source, trie, usize::MAX)
        .into_iter()
        .collect();
    let oracle = brute_force_decode(model, source, trie, k);
    if got.len() != oracle.len() {
        return Err(format!(
            "{source:?}: {} candidates, oracle has {}",
            got.len(),
            oracle.len()
        ));
    }
    for (c, (_, s)) in got.iter().zip(&oracle) {
        if (c.score - s).abs() >= 1e-9 {
            return Err(format!("{source:?}: score {} vs oracle {s}", c.score));
        }
        match all.get(&c.tokens) {
            Some(best) if (best - c.score).abs() < 1e-9 => {}
            _ => return Err(format!("{source:?}: {:?} is not scored as enumerated", c.tokens)),
        }
    }
    Ok(())
}

/// Pairwise AUC: wins count 1, ties 1/2.
pub fn brute_force_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut twice_wins, mut pairs) = (0u128, 0u128);
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// Leftmost-longest tagging by direct comparison against every surface.
/// Returns `(start, end, entity_id)` with the smallest id on shared surfaces.
pub fn brute_force_tag(tokens: &[String], kb: &KnowledgeBase) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut found: Option<(usize, String)> = None;
        for e in kb.lexicon.iter() {
            for s in e.surfaces() {
                let end = i + s.len();
                if s.is_empty() || end > tokens.len() || tokens[i..end] != s[..] {
                    continue;
                }
                let better = match &found {
                    None => true,
                    Some((fe, fid)) => end > *fe || (end == *fe && e.id < *fid),
                };
                if better {
                    found = Some((end, e.id.clone()));
                }
            }
        }
        match found {
            Some((end, id)) => {
                out.push((i, end, id));
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

pub fn phrase_option(model: &TranslationModel, s: &str, t: &str) -> Option<PhraseOption> {
    model.phrase(&toks(s), &toks(t)).cloned()
}

/// Phrase table of at most 20 entries over a 4-token source vocabulary and
/// a source of at most 5 tokens.
pub fn random_decoder_instance(rng: &mut ChaCha8Rng) -> (TranslationModel, Tokens) {
    let src_vocab = ["a", "b", "c", "d"];
    let tgt_vocab = ["w", "x", "y", "z"];
    let n_entries = rng.random_range(1..=20);
    let mut entries: Vec<(String, String, f64, f64)> = Vec::new();
    for _ in 0..n_entries {
        let sl = rng.random_range(1..=3);
        let tl = rng.random_range(1..=3);
        let s: Vec<&str> = (0..sl).map(|_| src_vocab[rng.random_range(0..4)]).collect();
        let t: Vec<&str> = (0..tl).map(|_| tgt_vocab[rng.random_range(0..4)]).collect();
        let (s, t) = (s.join(" "), t.join(" "));
        if entries.iter().any(|e| e.0 == s && e.1 == t) {
            continue;
        }
        entries.push((s, t, rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)));
    }
    let lm: Vec<String> = (0..4)
        .map(|_| {
            let n = rng.random_range(1..=5);
            (0..n)
                .map(|_| tgt_vocab[rng.random_range(0..4)])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let entries_ref: Vec<(&str, &str, f64, f64)> = entries
        .iter()
        .map(|(s, t, f, r)| (s.as_str(), t.as_str(), *f, *r))
        .collect();
    let lm_ref: Vec<&str> = lm.iter().map(String::as_str).collect();
    let model = table_model(&entries_ref, &lm_ref, 3);
    let n = rng.random_range(1..=5);
    let source: Tokens = (0..n).map(|_| src_vocab[rng.random_range(0..4)].to_string()).collect();
    (model, source)
}

pub fn random_feature_vector(rng: &mut ChaCha8Rng) -> FeatureVector {
    let mut dense = [0.0; DENSE_DIM];
    for d in &mut dense {
        *d = rng.random_range(-1.0..1.0);
    }
    let mut hashed: Vec<u32> = (0..rng.random_range(0..8))
        .map(|_| rng.random_range(DENSE_DIM..FEATURE_DIM) as u32)
        .collect();
    hashed.sort_unstable();
    hashed.dedup();
    FeatureVector { dense, hashed }
}

/// Relative error with a floor on the denominator for near-zero components.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Fourth-order central difference of `f` at 0 with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}
