//! Sentence <-> conceptual pattern conversion.
//!
//! Tagging is leftmost-longest over the knowledge base's surface index.
//! Mentions whose refined concept rolls up to a core concept become slots;
//! everything else, including mentions without a core ancestor, stays literal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::{self, Tokens};

/// Upper bound on sentences produced by [`instantiate`] for one pattern.
pub const INSTANTIATION_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    Literal(String),
    /// `occurrence` is 1-based among slots of the same concept, left to right.
    Slot {
        concept: String,
        occurrence: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotValue {
    pub concept: String,
    pub entity_id: String,
    pub surface: Tokens,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Pattern {
    pub segments: Vec<Segment>,
    /// One per slot segment, in left-to-right order. Empty for patterns
    /// parsed from text.
    pub slot_values: Vec<SlotValue>,
}

pub fn slot_token(concept: &str) -> String {
    format!("[{concept}]")
}

/// Concept id of a rendered slot placeholder, if `token` is one.
pub fn parse_slot_token(token: &str) -> Option<&str> {
    token
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .filter(|c| text::valid_identifier(c))
}

impl Pattern {
    /// Parses rendered pattern tokens (`[concept]` placeholders). Slot values
    /// are left empty.
    pub fn from_tokens(tokens: &[String]) -> Self {
        let mut counts: Vec<(String, usize)> = Vec::new();
        let segments = tokens
            .iter()
            .map(|tok| match parse_slot_token(tok) {
                Some(concept) => Segment::Slot {
                    concept: concept.to_string(),
                    occurrence: bump(&mut counts, concept),
                },
                None => Segment::Literal(tok.clone()),
            })
            .collect();
        Self {
            segments,
            slot_values: Vec::new(),
        }
    }

    pub fn parse(rendered: &str) -> Self {
        Self::from_tokens(&text::tokenize_pattern(rendered))
    }

    /// Rendered tokens: literals verbatim, slots as `[concept]`.
    pub fn tokens(&self) -> Tokens {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(t) => t.clone(),
                Segment::Slot { concept, .. } => slot_token(concept),
            })
            .collect()
    }

    pub fn render(&self) -> String {
        self.tokens().join(" ")
    }

    /// `(concept, occurrence)` for every slot, left to right.
    pub fn slots(&self) -> impl Iterator<Item = (&str, usize)> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot { concept, occurrence } => Some((concept.as_str(), *occurrence)),
            Segment::Literal(_) => None,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.slots().count()
    }

    /// `concept:entity:surface;...`
    pub fn render_slot_values(&self) -> String {
        render_slot_values(&self.slot_values)
    }

    /// Substitutes the recorded slot surfaces back in.
    pub fn surface_tokens(&self) -> Option<Tokens> {
        if self.slot_values.len() != self.slot_count() {
            return None;
        }
        let mut values = self.slot_values.iter();
        let mut out = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(t) => out.push(t.clone()),
                Segment::Slot { .. } => out.extend(values.next()?.surface.iter().cloned()),
            }
        }
        Some(out)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn render_slot_values(values: &[SlotValue]) -> String {
    values
        .iter()
        .map(|v| format!("{}:{}:{}", v.concept, v.entity_id, text::join(&v.surface)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_slot_values(field: &str) -> Option<Vec<SlotValue>> {
    if field.trim().is_empty() {
        return Some(Vec::new());
    }
    field
        .split(';')
        .map(|item| {
            let mut parts = item.splitn(3, ':');
            let concept = parts.next()?.trim();
            let entity = parts.next()?.trim();
            let surface = text::tokenize(parts.next()?);
            (!concept.is_empty() && !entity.is_empty() && !surface.is_empty()).then(|| SlotValue {
                concept: concept.to_string(),
                entity_id: entity.to_string(),
                surface,
            })
        })
        .collect()
}

fn bump(counts: &mut Vec<(String, usize)>, concept: &str) -> usize {
    match counts.iter_mut().find(|(c, _)| c == concept) {
        Some((_, n)) => {
            *n += 1;
            *n
        }
        None => {
            counts.push((concept.to_string(), 1));
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub entity_id: String,
    pub refined_concept: String,
    pub core_concept: Option<String>,
}

/// A surface that resolves to entities of different core concepts; the
/// tagger keeps the smallest entity id and reports the rest here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ambiguity {
    pub start: usize,
    pub end: usize,
    pub chosen: String,
    pub candidates: Vec<String>,
}

pub fn tag_sentence(tokens: &[String], kb: &KnowledgeBase) -> Vec<Mention> {
    tag_with_diagnostics(tokens, kb).0
}

pub fn tag_with_diagnostics(tokens: &[String], kb: &KnowledgeBase) -> (Vec<Mention>, Vec<Ambiguity>) {
    let mut mentions = Vec::new();
    let mut ambiguities = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let Some((end, ids)) = kb.mentions.longest_match(tokens, i) else {
            i += 1;
            continue;
        };
        let chosen = &ids[0];
        let entity = kb
            .lexicon
            .get(chosen)
            .expect("mention index only holds lexicon entities");
        let core = kb.core_concept_of_entity(chosen).map(str::to_string);
        if ids.len() > 1 && ids.iter().any(|id| kb.core_concept_of_entity(id) != core.as_deref()) {
            ambiguities.push(Ambiguity {
                start: i,
                end,
                chosen: chosen.clone(),
                candidates: ids.to_vec(),
            });
        }
        mentions.push(Mention {
            start: i,
            end,
            entity_id: chosen.clone(),
            refined_concept: entity.refined_concept.clone(),
            core_concept: core,
        });
        i = end;
    }
    (mentions, ambiguities)
}

pub fn conceptualize(tokens: &[String], kb: &KnowledgeBase) -> Pattern {
    pattern_from_mentions(tokens, &tag_sentence(tokens, kb))
}

pub fn pattern_from_mentions(tokens: &[String], mentions: &[Mention]) -> Pattern {
    let mut segments = Vec::with_capacity(tokens.len());
    let mut slot_values = Vec::new();
    let mut counts = Vec::new();
    let mut mentions = mentions.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(m) = mentions.next_if(|m| m.start == i) {
            if let Some(core) = &m.core_concept {
                segments.push(Segment::Slot {
                    concept: core.clone(),
                    occurrence: bump(&mut counts, core),
                });
                slot_values.push(SlotValue {
                    concept: core.clone(),
                    entity_id: m.entity_id.clone(),
                    surface: tokens[m.start..m.end].to_vec(),
                });
            } else {
                segments.extend(tokens[m.start..m.end].iter().cloned().map(Segment::Literal));
            }
            i = m.end;
        } else {
            segments.push(Segment::Literal(tokens[i].clone()));
            i += 1;
        }
    }
    Pattern { segments, slot_values }
}

/// Cartesian product of per-slot surfaces, leftmost slot varying slowest,
/// truncated at [`INSTANTIATION_CAP`].
pub fn instantiate(pattern: &Pattern, bindings: &[Vec<Tokens>]) -> Result<Vec<Tokens>> {
    let slots: Vec<(&str, usize)> = pattern.slots().collect();
    for (k, (concept, _)) in slots.iter().enumerate() {
        if bindings.get(k).is_none_or(|b| b.is_empty()) {
            return Err(Error::MissingBinding {
                slot: k,
                concept: concept.to_string(),
            });
        }
    }
    let mut out = Vec::new();
    let mut odometer = vec![0usize; slots.len()];
    loop {
        let mut sentence = Vec::new();
        let mut k = 0;
        for seg in &pattern.segments {
            match seg {
                Segment::Literal(t) => sentence.push(t.clone()),
                Segment::Slot { .. } => {
                    sentence.extend(bindings[k][odometer[k]].iter().cloned());
                    k += 1;
                }
            }
        }
        out.push(sentence);
        if out.len() >= INSTANTIATION_CAP {
            break;
        }
        // advance rightmost first
        let mut pos = slots.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < bindings[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
    Ok(out)
}
