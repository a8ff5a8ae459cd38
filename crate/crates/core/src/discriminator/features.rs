//! Pair features. Dense similarity features come first, followed by a
//! hashed block over the pattern pair and over pattern tokens present on
//! only one side.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::conceptualizer::{conceptualize, Pattern, SlotValue};
use crate::kb::KnowledgeBase;
use crate::text::Tokens;

pub const DENSE_NAMES: [&str; 7] = [
    "token_jaccard",
    "edit_similarity",
    "pattern_equal",
    "slot_agreement",
    "slot_disagreement",
    "length_difference",
    "bow_cosine",
];
pub const DENSE_DIM: usize = DENSE_NAMES.len();
pub const HASH_DIM: usize = 4096;
pub const FEATURE_DIM: usize = DENSE_DIM + HASH_DIM;

/// Dense values plus the active hashed indices (each with value 1.0, stored
/// as absolute feature indices, sorted and distinct).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dense: [f64; DENSE_DIM],
    pub hashed: Vec<u32>,
}

impl FeatureVector {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        let d: f64 = self.dense.iter().zip(weights).map(|(x, w)| x * w).sum();
        d + self.hashed.iter().map(|&i| weights[i as usize]).sum::<f64>()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; FEATURE_DIM];
        v[..DENSE_DIM].copy_from_slice(&self.dense);
        for &i in &self.hashed {
            v[i as usize] = 1.0;
        }
        v
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        DENSE_NAMES.iter().position(|n| *n == name).map(|i| self.dense[i])
    }
}

pub fn feature_names() -> Vec<String> {
    DENSE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain((0..HASH_DIM).map(|i| format!("hash_{i:04}")))
        .collect()
}

/// Slot pairs matched by concept and occurrence: the k-th slot of concept c
/// on one side against the k-th slot of c on the other.
pub fn aligned_slots<'a>(a: &'a Pattern, b: &'a Pattern) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, sa) in a.slot_values.iter().enumerate() {
        let occ = a.slot_values[..i].iter().filter(|v| v.concept == sa.concept).count();
        if let Some(j) = b
            .slot_values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.concept == sa.concept)
            .nth(occ)
            .map(|(j, _)| j)
        {
            out.push((i, j));
        }
    }
    out
}

pub fn extract_features(query: &[String], keyword: &[String], kb: &KnowledgeBase) -> FeatureVector {
    let pq = conceptualize(query, kb);
    let pk = conceptualize(keyword, kb);
    features_from_patterns(query, keyword, &pq, &pk)
}

pub fn features_from_patterns(query: &[String], keyword: &[String], pq: &Pattern, pk: &Pattern) -> FeatureVector {
    let sq: BTreeSet<&String> = query.iter().collect();
    let sk: BTreeSet<&String> = keyword.iter().collect();
    let union = sq.union(&sk).count();
    let jaccard = if union == 0 {
        1.0
    } else {
        sq.intersection(&sk).count() as f64 / union as f64
    };
    let edit = strsim::normalized_levenshtein(&query.join(" "), &keyword.join(" "));
    let tq = pq.tokens();
    let tk = pk.tokens();
    let pattern_equal = if tq == tk { 1.0 } else { 0.0 };
    let (agreement, disagreement) = slot_agreement(&pq.slot_values, &pk.slot_values, &aligned_slots(pq, pk));
    let max_len = query.len().max(keyword.len()).max(1) as f64;
    let length_difference = query.len().abs_diff(keyword.len()) as f64 / max_len;
    let cosine = bow_cosine(query, keyword);

    let mut hashed = BTreeSet::new();
    let (lo, hi) = if tq <= tk { (&tq, &tk) } else { (&tk, &tq) };
    hashed.insert(bucket(&["pair", &lo.join(" "), &hi.join(" ")]));
    let pq_set: BTreeSet<&String> = tq.iter().collect();
    let pk_set: BTreeSet<&String> = tk.iter().collect();
    for t in pq_set.symmetric_difference(&pk_set) {
        hashed.insert(bucket(&["diff", t]));
    }
    FeatureVector {
        dense: [
            jaccard,
            edit,
            pattern_equal,
            agreement,
            disagreement,
            length_difference,
            cosine,
        ],
        hashed: hashed.into_iter().collect(),
    }
}

fn slot_agreement(q: &[SlotValue], k: &[SlotValue], aligned: &[(usize, usize)]) -> (f64, f64) {
    if aligned.is_empty() {
        let a = if q.is_empty() && k.is_empty() { 1.0 } else { 0.0 };
        return (a, 0.0);
    }
    let same = aligned
        .iter()
        .filter(|&&(i, j)| q[i].entity_id == k[j].entity_id)
        .count();
    let agreement = same as f64 / aligned.len() as f64;
    (agreement, if same < aligned.len() { 1.0 } else { 0.0 })
}

fn bow_cosine(a: &[String], b: &[String]) -> f64 {
    let mut ca: HashMap<&str, f64> = HashMap::new();
    let mut cb: HashMap<&str, f64> = HashMap::new();
    for t in a {
        *ca.entry(t).or_default() += 1.0;
    }
    for t in b {
        *cb.entry(t).or_default() += 1.0;
    }
    let dot: f64 = ca.iter().map(|(t, x)| x * cb.get(t).copied().unwrap_or(0.0)).sum();
    let na: f64 = ca.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = cb.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 1.0 } else { 0.0 };
    }
    (dot / (na * nb)).min(1.0)
}

/// FNV-1a over the parts, separated by a unit separator byte.
fn bucket(parts: &[&str]) -> u32 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for b in p.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    (DENSE_DIM + (h % HASH_DIM as u64) as usize) as u32
}

/// Renders `pattern` with slot `slot` replaced by `surface` and every other
/// slot by its recorded surface.
pub fn render_with(pattern: &Pattern, slot: usize, surface: &[String]) -> Tokens {
    let mut out = Vec::new();
    let mut k = 0;
    for seg in &pattern.segments {
        match seg {
            crate::conceptualizer::Segment::Literal(t) => out.push(t.clone()),
            crate::conceptualizer::Segment::Slot { .. } => {
                if k == slot {
                    out.extend(surface.iter().cloned());
                } else {
                    out.extend(pattern.slot_values[k].surface.iter().cloned());
                }
                k += 1;
            }
        }
    }
    out
}
