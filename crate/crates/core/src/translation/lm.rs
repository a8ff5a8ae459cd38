//! N-gram language model with stupid backoff over target pattern tokens.

use std::collections::HashMap;

use super::vocab::{TokenId, BOS, EOS};

pub const BACKOFF: f64 = 0.4;
pub const UNK_LOGPROB: f64 = -10.0;
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    order: usize,
    backoff: f64,
    unk_logprob: f64,
    /// Natural-log relative frequency of every observed n-gram.
    logprobs: HashMap<Vec<TokenId>, f64>,
}

impl NgramLm {
    /// Each sentence is padded with one `<s>` and one `</s>`.
    pub fn train<'a>(order: usize, sentences: impl IntoIterator<Item = &'a [TokenId]>) -> Self {
        assert!((1..=MAX_ORDER).contains(&order), "n-gram order out of range");
        let mut counts: HashMap<Vec<TokenId>, u64> = HashMap::new();
        let mut unigram_total = 0u64;
        for sentence in sentences {
            let mut padded = Vec::with_capacity(sentence.len() + 2);
            padded.push(BOS);
            padded.extend_from_slice(sentence);
            padded.push(EOS);
            unigram_total += padded.len() as u64 - 1;
            for start in 0..padded.len() {
                for n in 1..=order.min(padded.len() - start) {
                    *counts.entry(padded[start..start + n].to_vec()).or_default() += 1;
                }
            }
        }
        let mut logprobs = HashMap::with_capacity(counts.len());
        for (ngram, &c) in &counts {
            let denom = if ngram.len() == 1 {
                if ngram[0] == BOS {
                    continue;
                }
                unigram_total
            } else {
                counts[&ngram[..ngram.len() - 1]]
            };
            logprobs.insert(ngram.clone(), (c as f64 / denom as f64).ln());
        }
        Self {
            order,
            backoff: BACKOFF,
            unk_logprob: UNK_LOGPROB,
            logprobs,
        }
    }

    pub fn from_parts(order: usize, backoff: f64, unk_logprob: f64, logprobs: HashMap<Vec<TokenId>, f64>) -> Self {
        Self {
            order,
            backoff,
            unk_logprob,
            logprobs,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn backoff(&self) -> f64 {
        self.backoff
    }

    pub fn unk_logprob(&self) -> f64 {
        self.unk_logprob
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[TokenId], f64)> {
        self.logprobs.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }

    /// Log score of `token` after `history`; only the last `order - 1`
    /// history tokens are consulted.
    pub fn score_next(&self, history: &[TokenId], token: TokenId) -> f64 {
        let ctx = history.len().min(self.order - 1);
        let mut key = [0 as TokenId; MAX_ORDER];
        let mut penalty = 0.0;
        for k in (0..=ctx).rev() {
            key[..k].copy_from_slice(&history[history.len() - k..]);
            key[k] = token;
            if let Some(lp) = self.logprobs.get(&key[..=k]) {
                return penalty + lp;
            }
            if k > 0 {
                penalty += self.backoff.ln();
            }
        }
        self.unk_logprob
    }

    /// Sentence log score including the end marker.
    pub fn lm_logprob(&self, tokens: &[TokenId]) -> f64 {
        let mut history = Vec::with_capacity(tokens.len() + 1);
        history.push(BOS);
        let mut total = 0.0;
        for &t in tokens {
            total += self.score_next(&history, t);
            history.push(t);
        }
        total + self.score_next(&history, EOS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_relative_frequencies() {
        // <s> a b a </s>
        let lm = NgramLm::train(2, [&[2u32, 3, 2][..]]);
        let expected = 1f64.ln() + 0.5f64.ln() + 1f64.ln() + 0.5f64.ln();
        assert!((lm.lm_logprob(&[2, 3, 2]) - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_scores_end_after_start() {
        let lm = NgramLm::train(2, [&[2u32][..], &[][..]]);
        assert!((lm.lm_logprob(&[]) - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unknown_tokens_are_finite() {
        let lm = NgramLm::train(3, [&[2u32, 3][..]]);
        let lp = lm.lm_logprob(&[99, 98]);
        assert!(lp.is_finite());
        assert!(lp <= 2.0 * UNK_LOGPROB);
    }

    #[test]
    fn backoff_applies_factor() {
        // unigrams over a b </s> a </s>: a=2/5
        let lm = NgramLm::train(2, [&[2u32, 3][..], &[2][..]]);
        let s = lm.score_next(&[3], 2);
        assert!((s - (BACKOFF.ln() + (2.0f64 / 5.0).ln())).abs() < 1e-12);
    }
}
