//! Phrase-based pattern-to-pattern translation: lexical alignment, phrase
//! extraction, an n-gram language model and a monotone stack decoder.

mod align;
mod decoder;
mod io;
mod lm;
mod phrases;
mod vocab;

use std::collections::HashMap;

pub use align::{symmetrize, LexicalModel};
pub use decoder::{
    decode, decode_constrained, Candidate, DecodeConfig, DecodeResult, DerivationStep, PASS_THROUGH_LOG_FWD,
    PASS_THROUGH_LOG_REV,
};
pub use io::{LM_FILE, MODEL_CONF_FILE, PHRASE_TABLE_FILE};
pub use lm::{NgramLm, BACKOFF, UNK_LOGPROB};
pub use phrases::{extract_spans, PhraseCounter, PhraseOption, PhraseTable};
pub use vocab::{TokenId, Vocab, BOS, BOS_TOKEN, EOS, EOS_TOKEN};

use crate::corpus::PatternPair;
use crate::error::{Error, Result};
use crate::text::Tokens;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrainConfig {
    pub ngram: usize,
    pub max_phrase_len: usize,
    pub em_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ngram: 3,
            max_phrase_len: 4,
            em_iterations: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=lm::MAX_ORDER).contains(&self.ngram) {
            return Err(Error::Config(format!(
                "ngram must be in 1..={}, got {}",
                lm::MAX_ORDER,
                self.ngram
            )));
        }
        if self.max_phrase_len == 0 {
            return Err(Error::Config("max_phrase_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights {
    pub tm_fwd: f64,
    pub tm_rev: f64,
    pub lm: f64,
    pub word_penalty: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self {
            tm_fwd: 1.0,
            tm_rev: 1.0,
            lm: 1.0,
            word_penalty: -0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationModel {
    pub vocab: Vocab,
    pub phrases: PhraseTable,
    pub lm: NgramLm,
    pub weights: FeatureWeights,
    pub max_phrase_len: usize,
}

impl TranslationModel {
    pub fn lm_logprob(&self, tokens: &[String]) -> f64 {
        let ids: Vec<TokenId> = tokens
            .iter()
            .map(|t| self.vocab.get(t).unwrap_or(TokenId::MAX))
            .collect();
        self.lm.lm_logprob(&ids)
    }

    /// Forward and reverse probabilities of a phrase pair, if present.
    pub fn phrase(&self, source: &[String], target: &[String]) -> Option<&PhraseOption> {
        let src: Option<Vec<TokenId>> = source.iter().map(|t| self.vocab.get(t)).collect();
        let tgt: Option<Vec<TokenId>> = target.iter().map(|t| self.vocab.get(t)).collect();
        let (src, tgt) = (src?, tgt?);
        self.phrases.get(&src).iter().find(|o| o.target == tgt)
    }

    /// Phrase table as string pairs.
    pub fn phrase_entries(&self) -> Vec<(Tokens, Tokens, f64, f64)> {
        let mut out: Vec<_> = self
            .phrases
            .iter()
            .map(|(s, o)| (self.vocab.strings(s), self.vocab.strings(&o.target), o.p_fwd, o.p_rev))
            .collect();
        out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        out
    }
}

/// Trains on the rendered token sequences of conceptualized pattern pairs.
/// Slot placeholders are ordinary vocabulary items.
pub fn train_model(corpus: &[PatternPair], config: &TrainConfig) -> Result<TranslationModel> {
    let sentences: Vec<(Tokens, Tokens)> = corpus.iter().map(|p| (p.source.tokens(), p.target.tokens())).collect();
    train_on_sentences(&sentences, config)
}

pub fn train_on_sentences(pairs: &[(Tokens, Tokens)], config: &TrainConfig) -> Result<TranslationModel> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = Vocab::default();
    let ids: Vec<(Vec<TokenId>, Vec<TokenId>)> = pairs
        .iter()
        .map(|(s, t)| (vocab.intern_all(s), vocab.intern_all(t)))
        .collect();
    let fwd_pairs: Vec<(&[TokenId], &[TokenId])> = ids.iter().map(|(s, t)| (s.as_slice(), t.as_slice())).collect();
    let rev_pairs: Vec<(&[TokenId], &[TokenId])> = ids.iter().map(|(s, t)| (t.as_slice(), s.as_slice())).collect();
    let fwd = LexicalModel::train(&fwd_pairs, config.em_iterations);
    let rev = LexicalModel::train(&rev_pairs, config.em_iterations);

    let mut counter = PhraseCounter::default();
    for (src, tgt) in &ids {
        let tgt_to_src = fwd.viterbi(src, tgt);
        let src_to_tgt = rev.viterbi(tgt, src);
        let alignment = symmetrize(src.len(), tgt.len(), &src_to_tgt, &tgt_to_src);
        counter.add_sentence(src, tgt, &alignment, config.max_phrase_len);
    }
    let lm = NgramLm::train(config.ngram, ids.iter().map(|(_, t)| t.as_slice()));
    Ok(TranslationModel {
        vocab,
        phrases: counter.into_table(),
        lm,
        weights: FeatureWeights::default(),
        max_phrase_len: config.max_phrase_len,
    })
}

/// Builds a model directly from a phrase table and target corpus; used for
/// hand-specified tables.
pub fn model_from_table(
    entries: &[(Tokens, Tokens, f64, f64)],
    lm_corpus: &[Tokens],
    ngram: usize,
    weights: FeatureWeights,
) -> TranslationModel {
    let mut vocab = Vocab::default();
    let mut phrases = PhraseTable::default();
    let mut max_len = 1;
    for (s, t, p_fwd, p_rev) in entries {
        max_len = max_len.max(s.len());
        let s = vocab.intern_all(s);
        let target = vocab.intern_all(t);
        phrases.insert(
            s,
            PhraseOption {
                target,
                p_fwd: *p_fwd,
                p_rev: *p_rev,
            },
        );
    }
    let corpus: Vec<Vec<TokenId>> = lm_corpus.iter().map(|s| vocab.intern_all(s)).collect();
    let lm = NgramLm::train(ngram, corpus.iter().map(Vec::as_slice));
    TranslationModel {
        vocab,
        phrases,
        lm,
        weights,
        max_phrase_len: max_len,
    }
}

pub(crate) fn lm_from_strings(
    vocab: &mut Vocab,
    order: usize,
    backoff: f64,
    unk: f64,
    entries: Vec<(Tokens, f64)>,
) -> NgramLm {
    let map: HashMap<Vec<TokenId>, f64> = entries.into_iter().map(|(k, v)| (vocab.intern_all(&k), v)).collect();
    NgramLm::from_parts(order, backoff, unk, map)
}
