//! Parallel pattern corpus construction with strict alignment cleaning.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::conceptualizer::{self, conceptualize, Pattern, SlotValue};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::{self, tokenize, Tokens};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphrasePair {
    pub source: Tokens,
    pub target: Tokens,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternPair {
    pub source: Pattern,
    pub target: Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    SlotCountMismatch,
    EntityMismatch,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::SlotCountMismatch => "slot-count-mismatch",
            RejectReason::EntityMismatch => "entity-mismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    Keep,
    Reject(RejectReason),
}

/// Keeps a pair iff both sides carry the same multiset of
/// `(core concept, entity id)` slot values. Slot order is irrelevant and
/// surfaces may differ (aliases of one entity align).
pub fn strict_alignment_filter(source: &Pattern, target: &Pattern) -> Alignment {
    if source.slot_values.len() != target.slot_values.len() {
        return Alignment::Reject(RejectReason::SlotCountMismatch);
    }
    if slot_multiset(&source.slot_values) != slot_multiset(&target.slot_values) {
        return Alignment::Reject(RejectReason::EntityMismatch);
    }
    Alignment::Keep
}

fn slot_multiset(values: &[SlotValue]) -> Vec<(&str, &str)> {
    let mut v: Vec<(&str, &str)> = values
        .iter()
        .map(|s| (s.concept.as_str(), s.entity_id.as_str()))
        .collect();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, Default)]
pub struct CorpusBuild {
    pub pairs: Vec<PatternPair>,
    pub rejected: BTreeMap<RejectReason, usize>,
}

impl CorpusBuild {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

/// Conceptualizes both sides of every pair and keeps the strictly aligned
/// ones. Output order follows input order.
pub fn build_parallel_patterns(pairs: &[ParaphrasePair], kb: &KnowledgeBase) -> CorpusBuild {
    let judged: Vec<(PatternPair, Alignment)> = pairs
        .par_iter()
        .map(|p| {
            let source = conceptualize(&p.source, kb);
            let target = conceptualize(&p.target, kb);
            let verdict = strict_alignment_filter(&source, &target);
            (PatternPair { source, target }, verdict)
        })
        .collect();
    let mut out = CorpusBuild::default();
    for (pair, verdict) in judged {
        match verdict {
            Alignment::Keep => out.pairs.push(pair),
            Alignment::Reject(reason) => *out.rejected.entry(reason).or_default() += 1,
        }
    }
    out
}

/// `source_sentence <TAB> target_sentence`
pub fn read_paraphrases(path: &Path) -> Result<Vec<ParaphrasePair>> {
    let contents = text::read_to_string(path)?;
    parse_paraphrases(&contents, &text::file_label(path))
}

pub fn parse_paraphrases(contents: &str, file: &str) -> Result<Vec<ParaphrasePair>> {
    text::data_lines(contents)
        .map(|(line_no, line)| {
            let (s, t) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(file, line_no, "expected `source<TAB>target`"))?;
            let pair = ParaphrasePair {
                source: tokenize(s),
                target: tokenize(t),
            };
            if pair.source.is_empty() || pair.target.is_empty() {
                return Err(Error::parse(file, line_no, "empty side in paraphrase pair"));
            }
            Ok(pair)
        })
        .collect()
}

pub fn paraphrases_to_tsv(pairs: &[ParaphrasePair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{}\t{}\n", text::join(&p.source), text::join(&p.target)))
        .collect()
}

/// `source_pattern <TAB> target_pattern <TAB> source slot values`. The
/// target side's values are the same multiset by construction; its surfaces
/// are not kept.
pub fn pattern_pairs_to_tsv(pairs: &[PatternPair]) -> String {
    pairs
        .iter()
        .map(|p| {
            format!(
                "{}\t{}\t{}\n",
                p.source.render(),
                p.target.render(),
                p.source.render_slot_values()
            )
        })
        .collect()
}

pub fn parse_pattern_pairs(contents: &str, file: &str) -> Result<Vec<PatternPair>> {
    text::data_lines(contents)
        .map(|(line_no, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::parse(
                    file,
                    line_no,
                    "expected `source_pattern<TAB>target_pattern[<TAB>slot_values]`",
                ));
            }
            let mut source = Pattern::parse(fields[0]);
            let target = Pattern::parse(fields[1]);
            if source.segments.is_empty() || target.segments.is_empty() {
                return Err(Error::parse(file, line_no, "empty pattern"));
            }
            if let Some(field) = fields.get(2) {
                source.slot_values = conceptualizer::parse_slot_values(field)
                    .ok_or_else(|| Error::parse(file, line_no, "malformed slot values"))?;
            }
            Ok(PatternPair { source, target })
        })
        .collect()
}

pub fn read_pattern_pairs(path: &Path) -> Result<Vec<PatternPair>> {
    parse_pattern_pairs(&text::read_to_string(path)?, &text::file_label(path))
}
