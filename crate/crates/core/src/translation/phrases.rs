//! Phrase extraction under alignment consistency and relative-frequency
//! phrase probabilities.

use std::collections::{BTreeSet, HashMap};

use super::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseOption {
    pub target: Vec<TokenId>,
    /// p(target | source)
    pub p_fwd: f64,
    /// p(source | target)
    pub p_rev: f64,
}

impl PhraseOption {
    pub fn log_fwd(&self) -> f64 {
        self.p_fwd.ln()
    }

    pub fn log_rev(&self) -> f64 {
        self.p_rev.ln()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseTable {
    entries: HashMap<Vec<TokenId>, Vec<PhraseOption>>,
}

impl PhraseTable {
    pub fn get(&self, source: &[TokenId]) -> &[PhraseOption] {
        self.entries.get(source).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_source(&self, source: &[TokenId]) -> bool {
        self.entries.contains_key(source)
    }

    pub fn insert(&mut self, source: Vec<TokenId>, option: PhraseOption) {
        let options = self.entries.entry(source).or_default();
        match options.binary_search_by(|o| o.target.cmp(&option.target)) {
            Ok(i) => options[i] = option,
            Err(i) => options.insert(i, option),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by source then target ids.
    pub fn iter(&self) -> impl Iterator<Item = (&[TokenId], &PhraseOption)> {
        let mut sources: Vec<&Vec<TokenId>> = self.entries.keys().collect();
        sources.sort();
        sources
            .into_iter()
            .flat_map(move |s| self.entries[s].iter().map(move |o| (s.as_slice(), o)))
    }

    pub fn max_source_len(&self) -> usize {
        self.entries.keys().map(Vec::len).max().unwrap_or(0)
    }
}

/// Accumulates phrase-pair counts over aligned sentence pairs.
#[derive(Debug, Default)]
pub struct PhraseCounter {
    pairs: HashMap<(Vec<TokenId>, Vec<TokenId>), u64>,
    sources: HashMap<Vec<TokenId>, u64>,
    targets: HashMap<Vec<TokenId>, u64>,
}

impl PhraseCounter {
    pub fn add_sentence(
        &mut self,
        src: &[TokenId],
        tgt: &[TokenId],
        alignment: &BTreeSet<(usize, usize)>,
        max_len: usize,
    ) {
        for ((s1, s2), (t1, t2)) in extract_spans(src.len(), tgt.len(), alignment, max_len) {
            let s = src[s1..s2].to_vec();
            let t = tgt[t1..t2].to_vec();
            *self.sources.entry(s.clone()).or_default() += 1;
            *self.targets.entry(t.clone()).or_default() += 1;
            *self.pairs.entry((s, t)).or_default() += 1;
        }
    }

    pub fn into_table(self) -> PhraseTable {
        let mut table = PhraseTable::default();
        for ((s, t), c) in self.pairs {
            let option = PhraseOption {
                p_fwd: c as f64 / self.sources[&s] as f64,
                p_rev: c as f64 / self.targets[&t] as f64,
                target: t,
            };
            table.insert(s, option);
        }
        table
    }
}

/// Consistent phrase spans (half-open source range, half-open target range)
/// with both sides no longer than `max_len`. Unaligned target words at the
/// edges are absorbed in every combination.
pub fn extract_spans(
    src_len: usize,
    tgt_len: usize,
    alignment: &BTreeSet<(usize, usize)>,
    max_len: usize,
) -> Vec<((usize, usize), (usize, usize))> {
    let mut tgt_aligned = vec![false; tgt_len];
    for &(_, t) in alignment {
        tgt_aligned[t] = true;
    }
    let mut out = Vec::new();
    for s1 in 0..src_len {
        for s2 in s1..src_len.min(s1 + max_len) {
            let mut t_min = usize::MAX;
            let mut t_max = 0;
            for &(s, t) in alignment {
                if (s1..=s2).contains(&s) {
                    t_min = t_min.min(t);
                    t_max = t_max.max(t);
                }
            }
            if t_min == usize::MAX || t_max - t_min + 1 > max_len {
                continue;
            }
            let consistent = alignment
                .iter()
                .all(|&(s, t)| !(t_min..=t_max).contains(&t) || (s1..=s2).contains(&s));
            if !consistent {
                continue;
            }
            let mut ts = t_min;
            loop {
                let mut te = t_max;
                loop {
                    if te - ts < max_len {
                        out.push(((s1, s2 + 1), (ts, te + 1)));
                    }
                    te += 1;
                    if te >= tgt_len || tgt_aligned[te] || te - ts >= max_len {
                        break;
                    }
                }
                if ts == 0 || tgt_aligned[ts - 1] || t_max + 1 - ts >= max_len {
                    break;
                }
                ts -= 1;
            }
        }
    }
    out
}
