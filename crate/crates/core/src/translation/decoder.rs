//! Monotone stack decoding, optionally constrained to a pattern trie.
//!
//! Stacks are indexed by covered source prefix length. Hypotheses with the
//! same emitted tokens in one stack share every future score, so only the
//! best of them is kept. With stacks large enough that nothing is pruned,
//! the result is the exact top-k over all segmentations and translations.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use super::lm::UNK_LOGPROB;
use super::vocab::{TokenId, BOS, EOS};
use super::TranslationModel;
use crate::text::Tokens;
use crate::trie::PatternTrie;

/// Forward log-probability charged for copying a source token that has no
/// single-token phrase entry.
pub const PASS_THROUGH_LOG_FWD: f64 = UNK_LOGPROB;
pub const PASS_THROUGH_LOG_REV: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeConfig {
    pub beam: usize,
    pub stack_size: usize,
    /// Translation options kept per source span, best first.
    pub table_limit: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam: 50,
            stack_size: 100,
            table_limit: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationStep {
    /// Half-open source token range.
    pub source_span: (usize, usize),
    pub target: Tokens,
    pub log_fwd: f64,
    pub log_rev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub tokens: Tokens,
    pub score: f64,
    pub derivation: Vec<DerivationStep>,
}

/// Sorted by descending score, ties by ascending token sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DecodeResult {
    pub candidates: Vec<Candidate>,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

struct Opt {
    target: Vec<TokenId>,
    log_fwd: f64,
    log_rev: f64,
    cost: f64,
}

#[derive(Clone)]
struct Hyp {
    /// Emitted tokens preceded by `<s>`.
    history: Vec<TokenId>,
    score: f64,
    node: usize,
    steps: Vec<(usize, usize, usize)>,
}

struct Decoder<'a> {
    model: &'a TranslationModel,
    trie: Option<&'a PatternTrie>,
    locals: Vec<String>,
}

impl Decoder<'_> {
    fn token(&self, id: TokenId) -> &str {
        let v = self.model.vocab.len();
        if (id as usize) < v {
            self.model.vocab.token(id).unwrap_or_default()
        } else {
            &self.locals[id as usize - v]
        }
    }

    fn cmp_tokens(&self, a: &[TokenId], b: &[TokenId]) -> Ordering {
        a.iter().map(|&t| self.token(t)).cmp(b.iter().map(|&t| self.token(t)))
    }

    fn rank(&self, a: &Hyp, b: &Hyp) -> Ordering {
        b.score
            .total_cmp(&a.score)
            .then_with(|| self.cmp_tokens(&a.history, &b.history))
    }

    fn options(&self, src: &[TokenId], config: &DecodeConfig) -> Vec<Vec<Vec<Opt>>> {
        let w = &self.model.weights;
        let n = src.len();
        let max_len = self.model.max_phrase_len.max(1);
        let mut table: Vec<Vec<Vec<Opt>>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut by_end = Vec::new();
            for j in i + 1..=n.min(i + max_len) {
                let mut opts: Vec<Opt> = self
                    .model
                    .phrases
                    .get(&src[i..j])
                    .iter()
                    .map(|o| {
                        let (lf, lr) = (o.log_fwd(), o.log_rev());
                        Opt {
                            target: o.target.clone(),
                            log_fwd: lf,
                            log_rev: lr,
                            cost: w.tm_fwd * lf + w.tm_rev * lr + w.word_penalty * o.target.len() as f64,
                        }
                    })
                    .collect();
                opts.sort_by(|a, b| {
                    (w.tm_fwd * b.log_fwd + w.tm_rev * b.log_rev)
                        .total_cmp(&(w.tm_fwd * a.log_fwd + w.tm_rev * a.log_rev))
                        .then_with(|| self.cmp_tokens(&a.target, &b.target))
                });
                opts.truncate(config.table_limit);
                if j == i + 1 && opts.is_empty() {
                    opts.push(Opt {
                        target: vec![src[i]],
                        log_fwd: PASS_THROUGH_LOG_FWD,
                        log_rev: PASS_THROUGH_LOG_REV,
                        cost: w.tm_fwd * PASS_THROUGH_LOG_FWD + w.tm_rev * PASS_THROUGH_LOG_REV + w.word_penalty,
                    });
                }
                by_end.push(opts);
            }
            table.push(by_end);
        }
        table
    }

    fn run(&mut self, source: &[String], config: &DecodeConfig) -> DecodeResult {
        let vlen = self.model.vocab.len();
        let src: Vec<TokenId> = source
            .iter()
            .map(|t| match self.model.vocab.get(t) {
                Some(id) => id,
                None => {
                    let pos = match self.locals.iter().position(|l| l == t) {
                        Some(p) => p,
                        None => {
                            self.locals.push(t.clone());
                            self.locals.len() - 1
                        }
                    };
                    (vlen + pos) as TokenId
                }
            })
            .collect();
        let n = src.len();
        let table = self.options(&src, config);
        let lm = &self.model.lm;
        let w_lm = self.model.weights.lm;

        let mut stacks: Vec<Vec<Hyp>> = (0..=n).map(|_| Vec::new()).collect();
        let mut seen: Vec<HashMap<Vec<TokenId>, usize>> = (0..=n).map(|_| HashMap::new()).collect();
        stacks[0].push(Hyp {
            history: vec![BOS],
            score: 0.0,
            node: PatternTrie::ROOT,
            steps: Vec::new(),
        });
        if n == 0 {
            let h = &mut stacks[0][0];
            if self.trie.is_some_and(|t| !t.is_terminal(PatternTrie::ROOT)) {
                stacks[0].clear();
            } else {
                h.score = w_lm * lm.score_next(&h.history, EOS);
            }
        }

        for i in 0..n {
            let mut current = std::mem::take(&mut stacks[i]);
            current.sort_by(|a, b| self.rank(a, b));
            current.truncate(config.stack_size);
            for hyp in &current {
                for (k, opts) in table[i].iter().enumerate() {
                    let j = i + k + 1;
                    'opt: for (oi, opt) in opts.iter().enumerate() {
                        let mut node = hyp.node;
                        if let Some(trie) = self.trie {
                            for &t in &opt.target {
                                match trie.child(node, self.token(t)) {
                                    Some(next) => node = next,
                                    None => continue 'opt,
                                }
                            }
                            if j == n && !trie.is_terminal(node) {
                                continue;
                            }
                        }
                        let mut history = hyp.history.clone();
                        let mut score = hyp.score + opt.cost;
                        for &t in &opt.target {
                            score += w_lm * lm.score_next(&history, t);
                            history.push(t);
                        }
                        if j == n {
                            score += w_lm * lm.score_next(&history, EOS);
                        }
                        let mut steps = hyp.steps.clone();
                        steps.push((i, j, oi));
                        let new = Hyp {
                            history,
                            score,
                            node,
                            steps,
                        };
                        match seen[j].get(&new.history) {
                            Some(&idx) => {
                                if new.score > stacks[j][idx].score {
                                    stacks[j][idx] = new;
                                }
                            }
                            None => {
                                seen[j].insert(new.history.clone(), stacks[j].len());
                                stacks[j].push(new);
                            }
                        }
                    }
                }
            }
            stacks[i] = current;
        }

        let mut finished = std::mem::take(&mut stacks[n]);
        finished.sort_by(|a, b| self.rank(a, b));
        finished.truncate(config.beam.min(config.stack_size.max(1)).max(1));
        let candidates = finished
            .into_iter()
            .map(|h| Candidate {
                tokens: h.history[1..].iter().map(|&t| self.token(t).to_string()).collect(),
                score: h.score,
                derivation: h
                    .steps
                    .iter()
                    .map(|&(i, j, oi)| {
                        let opt = &table[i][j - i - 1][oi];
                        DerivationStep {
                            source_span: (i, j),
                            target: opt.target.iter().map(|&t| self.token(t).to_string()).collect(),
                            log_fwd: opt.log_fwd,
                            log_rev: opt.log_rev,
                        }
                    })
                    .collect(),
            })
            .collect();
        DecodeResult { candidates }
    }
}

impl TranslationModel {
    pub fn decode(&self, source: &[String], config: &DecodeConfig) -> DecodeResult {
        Decoder {
            model: self,
            trie: None,
            locals: Vec::new(),
        }
        .run(source, config)
    }

    /// Every emitted token must follow a trie edge and every result ends on
    /// a terminal node, so results are exactly trie members.
    pub fn decode_constrained(&self, source: &[String], trie: &PatternTrie, config: &DecodeConfig) -> DecodeResult {
        Decoder {
            model: self,
            trie: Some(trie),
            locals: Vec::new(),
        }
        .run(source, config)
    }

    /// Recomputes a candidate's score from its derivation.
    pub fn rescore(&self, candidate: &Candidate) -> f64 {
        let w = &self.weights;
        let tm: f64 = candidate
            .derivation
            .iter()
            .map(|s| w.tm_fwd * s.log_fwd + w.tm_rev * s.log_rev + w.word_penalty * s.target.len() as f64)
            .sum();
        tm + w.lm * self.lm_logprob(&candidate.tokens)
    }
}

pub fn decode(model: &TranslationModel, source: &[String], config: &DecodeConfig) -> DecodeResult {
    model.decode(source, config)
}

pub fn decode_constrained(
    model: &TranslationModel,
    source: &[String],
    trie: &PatternTrie,
    config: &DecodeConfig,
) -> DecodeResult {
    model.decode_constrained(source, trie, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use crate::translation::{model_from_table, FeatureWeights};

    fn toks(s: &str) -> Tokens {
        tokenize(s)
    }

    fn toy() -> TranslationModel {
        let entries = vec![
            (toks("a"), toks("x"), 1.0, 1.0),
            (toks("b"), toks("y"), 1.0, 1.0),
            (toks("a b"), toks("z"), 1.0, 1.0),
        ];
        model_from_table(&entries, &[toks("x y"), toks("z")], 3, FeatureWeights::default())
    }

    #[test]
    fn toy_table_yields_both_segmentations() {
        let m = toy();
        let cfg = DecodeConfig {
            beam: 3,
            ..DecodeConfig::default()
        };
        let r = m.decode(&toks("a b"), &cfg);
        let outs: Vec<String> = r.candidates.iter().map(|c| c.tokens.join(" ")).collect();
        assert_eq!(outs.len(), 2);
        assert!(outs.contains(&"z".to_string()) && outs.contains(&"x y".to_string()));
        assert!(r.candidates[0].score >= r.candidates[1].score);
        for c in &r.candidates {
            assert!((m.rescore(c) - c.score).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_tokens_pass_through() {
        let m = toy();
        let r = m.decode(&toks("a qqq"), &DecodeConfig::default());
        assert_eq!(r.best().unwrap().tokens, toks("x qqq"));
    }

    #[test]
    fn constrained_results_are_trie_members() {
        let m = toy();
        let trie = PatternTrie::from_patterns([toks("x y")]);
        let r = m.decode_constrained(&toks("a b"), &trie, &DecodeConfig::default());
        assert_eq!(r.len(), 1);
        assert_eq!(r.candidates[0].tokens, toks("x y"));
        let empty = PatternTrie::new();
        assert!(m
            .decode_constrained(&toks("a b"), &empty, &DecodeConfig::default())
            .is_empty());
    }

    #[test]
    fn empty_source_decodes_to_empty_target() {
        let m = toy();
        let r = m.decode(&[], &DecodeConfig::default());
        assert_eq!(r.len(), 1);
        assert!(r.candidates[0].tokens.is_empty());
    }
}
