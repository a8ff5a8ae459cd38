//! Entity-replacement augmentation: aligned concept slots of training pairs
//! are refilled with rare entities of the same core concept.

use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{aligned_slots, render_with};
use super::{LabeledPair, Origin};
use crate::conceptualizer::{conceptualize, tag_sentence, Pattern};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::Tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AugmentationConfig {
    /// Entities mentioned at most this often in training are rare.
    pub rare_frequency_threshold: usize,
    /// Augmented pairs as a fraction of the training set size.
    pub proportion: f64,
    pub confusable_max_edit: usize,
    pub confusable_min_overlap: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            rare_frequency_threshold: 2,
            proportion: 0.12,
            confusable_max_edit: 2,
            confusable_min_overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AugmentDiagnostics {
    pub budget: usize,
    pub positive_budget: usize,
    pub negative_budget: usize,
    pub eligible_positive: usize,
    pub eligible_negative: usize,
    /// Concept -> draws skipped because too few rare entities exist.
    pub skipped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Augmentation {
    pub pairs: Vec<LabeledPair>,
    pub diagnostics: AugmentDiagnostics,
}

/// Mentions per entity over both sides of `pairs`; alias mentions count
/// toward their entity.
pub fn entity_frequencies(pairs: &[LabeledPair], kb: &KnowledgeBase) -> HashMap<String, usize> {
    let mut freq = HashMap::new();
    for p in pairs {
        for side in [&p.query, &p.keyword] {
            for m in tag_sentence(side, kb) {
                *freq.entry(m.entity_id).or_default() += 1;
            }
        }
    }
    freq
}

/// Shared characters (as a multiset, whitespace ignored) over the longer
/// length.
pub fn char_overlap(a: &str, b: &str) -> f64 {
    let mut counts: HashMap<char, isize> = HashMap::new();
    let (mut la, mut lb) = (0usize, 0usize);
    for c in a.chars().filter(|c| !c.is_whitespace()) {
        *counts.entry(c).or_default() += 1;
        la += 1;
    }
    let mut shared = 0usize;
    for c in b.chars().filter(|c| !c.is_whitespace()) {
        lb += 1;
        let e = counts.entry(c).or_default();
        if *e > 0 {
            *e -= 1;
            shared += 1;
        }
    }
    let m = la.max(lb);
    if m == 0 {
        0.0
    } else {
        shared as f64 / m as f64
    }
}

pub fn confusable(a: &str, b: &str, cfg: &AugmentationConfig) -> bool {
    strsim::levenshtein(a, b) <= cfg.confusable_max_edit || char_overlap(a, b) >= cfg.confusable_min_overlap
}

struct Eligible {
    index: usize,
    query: Pattern,
    keyword: Pattern,
    aligned: Vec<(usize, usize)>,
}

struct Pools<'a> {
    kb: &'a KnowledgeBase,
    cfg: &'a AugmentationConfig,
    /// Core concept -> rare entity ids, sorted.
    rare: BTreeMap<String, Vec<String>>,
}

impl Pools<'_> {
    fn surface(&self, entity: &str, rng: &mut ChaCha8Rng) -> Tokens {
        let surfaces = self.kb.aliases_of(entity).expect("rare pool holds lexicon entities");
        surfaces.choose(rng).expect("entities have a canonical surface").clone()
    }

    fn canonical(&self, entity: &str) -> String {
        self.kb
            .lexicon
            .get(entity)
            .map(|e| e.canonical.join(" "))
            .unwrap_or_default()
    }

    /// A different rare entity; confusable with `entity` when possible.
    fn other(&self, concept: &str, entity: &str, prefer_confusable: bool, rng: &mut ChaCha8Rng) -> Option<String> {
        let pool: Vec<&String> = self.rare.get(concept)?.iter().filter(|e| *e != entity).collect();
        if pool.is_empty() {
            return None;
        }
        if prefer_confusable {
            let base = self.canonical(entity);
            let close: Vec<&String> = pool
                .iter()
                .copied()
                .filter(|e| confusable(&base, &self.canonical(e), self.cfg))
                .collect();
            if !close.is_empty() {
                return close.choose(rng).map(|e| e.to_string());
            }
        }
        pool.choose(rng).map(|e| e.to_string())
    }
}

/// Emits exactly `round(proportion * |train|)` pairs unless rare entities
/// run out. Positive and negative recipes draw from separate seeded streams,
/// so a smaller proportion yields a prefix of a larger one's output.
pub fn augment_dataset(
    train: &[LabeledPair],
    kb: &KnowledgeBase,
    cfg: &AugmentationConfig,
    seed: u64,
) -> Result<Augmentation> {
    if !(0.0..=0.5).contains(&cfg.proportion) {
        return Err(Error::Config(format!(
            "augmentation proportion must be within [0, 0.5], got {}",
            cfg.proportion
        )));
    }
    let budget = (cfg.proportion * train.len() as f64).round() as usize;
    let mut diagnostics = AugmentDiagnostics {
        budget,
        ..AugmentDiagnostics::default()
    };
    if budget == 0 {
        return Ok(Augmentation {
            pairs: Vec::new(),
            diagnostics,
        });
    }

    let freq = entity_frequencies(train, kb);
    let mut rare: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in kb.lexicon.iter() {
        if freq.get(&e.id).copied().unwrap_or(0) <= cfg.rare_frequency_threshold {
            if let Some(core) = kb.core_concept_of_entity(&e.id) {
                rare.entry(core.to_string()).or_default().push(e.id.clone());
            }
        }
    }
    for ids in rare.values_mut() {
        ids.sort();
    }
    let pools = Pools { kb, cfg, rare };

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (index, p) in train.iter().enumerate() {
        let query = conceptualize(&p.query, kb);
        let keyword = conceptualize(&p.keyword, kb);
        let aligned = aligned_slots(&query, &keyword);
        if aligned.is_empty() {
            continue;
        }
        let e = Eligible {
            index,
            query,
            keyword,
            aligned,
        };
        if p.label == 1 {
            positives.push(e);
        } else {
            negatives.push(e);
        }
    }
    diagnostics.eligible_positive = positives.len();
    diagnostics.eligible_negative = negatives.len();
    let eligible = positives.len() + negatives.len();
    if eligible == 0 {
        return Ok(Augmentation {
            pairs: Vec::new(),
            diagnostics,
        });
    }
    let negative_budget = (budget as f64 * negatives.len() as f64 / eligible as f64).round() as usize;
    let positive_budget = budget - negative_budget;
    diagnostics.positive_budget = positive_budget;
    diagnostics.negative_budget = negative_budget;

    let attempts_limit = 20 * budget + 100;
    let mut out = Vec::with_capacity(budget);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut emitted = 0;
    let mut attempts = 0;
    while emitted < positive_budget && !positives.is_empty() && attempts < attempts_limit {
        attempts += 1;
        let e = positives.choose(&mut rng).expect("non-empty");
        let &(i, j) = e.aligned.choose(&mut rng).expect("eligible pairs have aligned slots");
        let concept = e.query.slot_values[i].concept.clone();
        let Some(er) = pools.rare.get(&concept).and_then(|r| r.choose(&mut rng)).cloned() else {
            *diagnostics.skipped.entry(concept).or_default() += 1;
            continue;
        };
        let base = &train[e.index];
        let q_surface = pools.surface(&er, &mut rng);
        let k_surface = pools.surface(&er, &mut rng);
        out.push(LabeledPair {
            query: render_with(&e.query, i, &q_surface),
            keyword: render_with(&e.keyword, j, &k_surface),
            label: 1,
            match_type: base.match_type,
            origin: Origin::Augmented,
        });
        emitted += 1;
        if emitted == positive_budget {
            break;
        }
        let Some(other) = pools.other(&concept, &er, true, &mut rng) else {
            *diagnostics.skipped.entry(concept).or_default() += 1;
            continue;
        };
        let o_surface = pools.surface(&other, &mut rng);
        out.push(LabeledPair {
            query: render_with(&e.query, i, &q_surface),
            keyword: render_with(&e.keyword, j, &o_surface),
            label: 0,
            match_type: base.match_type,
            origin: Origin::Augmented,
        });
        emitted += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut emitted = 0;
    let mut attempts = 0;
    while emitted < negative_budget && !negatives.is_empty() && attempts < attempts_limit {
        attempts += 1;
        let e = negatives.choose(&mut rng).expect("non-empty");
        let &(i, j) = e.aligned.choose(&mut rng).expect("eligible pairs have aligned slots");
        let concept = e.query.slot_values[i].concept.clone();
        let Some(er) = pools.rare.get(&concept).and_then(|r| r.choose(&mut rng)).cloned() else {
            *diagnostics.skipped.entry(concept).or_default() += 1;
            continue;
        };
        let same = rng.random_bool(0.5);
        let target = if same {
            er.clone()
        } else {
            match pools.other(&concept, &er, false, &mut rng) {
                Some(o) => o,
                None => {
                    *diagnostics.skipped.entry(concept).or_default() += 1;
                    continue;
                }
            }
        };
        let q_surface = pools.surface(&er, &mut rng);
        let k_surface = pools.surface(&target, &mut rng);
        negatives_push(&mut out, e, train, i, j, &q_surface, &k_surface);
        emitted += 1;
    }
    Ok(Augmentation {
        pairs: out,
        diagnostics,
    })
}

fn negatives_push(
    out: &mut Vec<LabeledPair>,
    e: &Eligible,
    train: &[LabeledPair],
    i: usize,
    j: usize,
    q_surface: &[String],
    k_surface: &[String],
) {
    out.push(LabeledPair {
        query: render_with(&e.query, i, q_surface),
        keyword: render_with(&e.keyword, j, k_surface),
        label: 0,
        match_type: train[e.index].match_type,
        origin: Origin::Augmented,
    });
}
