//! Frequency-bucketed accuracy, AUC and recall at a precision target, plus
//! the end-to-end experiment runner.

mod experiments;

use std::collections::HashMap;

use serde::Serialize;

pub use experiments::{
    discriminator_metrics, gen_accuracy, run_experiments, run_experiments_on, top_rewrite, BucketAccuracy,
    DiscriminatorMetrics, EvalConfig, EvalInputs, EvalReport, GenMode, GenModels, SweepRow, Throughput,
};

use crate::conceptualizer::tag_sentence;
use crate::discriminator::operating_point;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::Tokens;

/// Inclusive upper bounds of buckets 1 to 3; bucket 4 is unbounded.
pub const BUCKET_UPPER: [usize; 3] = [10, 100, 1000];
pub const BUCKET_LABELS: [&str; 4] = ["1-10", "11-100", "101-1000", ">1000"];

/// 1-based bucket of a positive frequency; `None` for 0.
pub fn bucket_index(frequency: usize) -> Option<usize> {
    if frequency == 0 {
        return None;
    }
    Some(BUCKET_UPPER.iter().position(|&b| frequency <= b).map_or(4, |i| i + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BucketedQuery {
    pub query: Tokens,
    pub entity_id: String,
    pub frequency: usize,
    pub bucket: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedQuery {
    pub query: Tokens,
    pub reason: String,
}

/// Each included query lies in exactly one of the four buckets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FrequencyBuckets {
    pub buckets: [Vec<BucketedQuery>; 4],
    pub excluded: Vec<ExcludedQuery>,
}

impl FrequencyBuckets {
    pub fn included(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn sizes(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.buckets[i].len())
    }
}

/// Mentions per entity across `sentences`; alias mentions count toward
/// their entity.
pub fn mention_frequencies(sentences: &[Tokens], kb: &KnowledgeBase) -> HashMap<String, usize> {
    let mut freq = HashMap::new();
    for s in sentences {
        for m in tag_sentence(s, kb) {
            *freq.entry(m.entity_id).or_default() += 1;
        }
    }
    freq
}

/// Buckets single-entity test queries by their entity's mention count in
/// the training queries. Multi-entity, entity-free and unseen-entity
/// queries are excluded with a reason.
pub fn bucket_test_set(test: &[Tokens], train_queries: &[Tokens], kb: &KnowledgeBase) -> FrequencyBuckets {
    let freq = mention_frequencies(train_queries, kb);
    let mut out = FrequencyBuckets::default();
    for q in test {
        let mentions = tag_sentence(q, kb);
        if mentions.len() != 1 {
            out.excluded.push(ExcludedQuery {
                query: q.clone(),
                reason: format!("{} entities", mentions.len()),
            });
            continue;
        }
        let entity_id = mentions[0].entity_id.clone();
        let frequency = freq.get(&entity_id).copied().unwrap_or(0);
        match bucket_index(frequency) {
            Some(bucket) => out.buckets[bucket - 1].push(BucketedQuery {
                query: q.clone(),
                entity_id,
                frequency,
                bucket,
            }),
            None => out.excluded.push(ExcludedQuery {
                query: q.clone(),
                reason: "entity absent from training".into(),
            }),
        }
    }
    out
}

/// Probability that a random positive outscores a random negative, ties
/// counted half. Computed exactly as `(2 * wins + ties) / (2 * P * N)`.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 {
        return Err(Error::SingleClass(0));
    }
    if negatives == 0 {
        return Err(Error::SingleClass(1));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // wins2 accumulates 2 * wins + ties over tie groups in ascending order
    let (mut wins2, mut negatives_below) = (0u128, 0u128);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut pos, mut neg) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        wins2 += pos * (2 * negatives_below + neg);
        negatives_below += neg;
    }
    Ok(wins2 as f64 / (2 * positives as u128 * negatives as u128) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallAtPrecision {
    pub recall: f64,
    pub threshold: Option<f64>,
    /// False when no threshold meets the target; recall is then 0.
    pub attainable: bool,
}

pub fn recall_at_precision(scores: &[f64], labels: &[u8], precision_target: f64) -> RecallAtPrecision {
    match operating_point(scores, labels, precision_target) {
        Some(p) => RecallAtPrecision {
            recall: p.recall,
            threshold: Some(p.threshold),
            attainable: true,
        },
        None => RecallAtPrecision {
            recall: 0.0,
            threshold: None,
            attainable: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn four_point_auc() {
        let s = [0.9, 0.8, 0.7, 0.6];
        let l = [1, 0, 1, 0];
        assert_eq!(auc(&s, &l).unwrap(), 0.75);
        assert_eq!(brute_auc(&s, &l), 0.75);
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.5, 0.4], &[1, 1]), Err(Error::SingleClass(_))));
    }

    #[test]
    fn recall_on_four_points() {
        let r = recall_at_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0], 0.70);
        assert!(r.attainable);
        assert_eq!(r.recall, 0.5);
        assert_eq!(r.threshold, Some(0.9));
    }

    #[test]
    fn unattainable_recall_is_flagged() {
        let r = recall_at_precision(&[0.9, 0.8], &[0, 1], 0.99);
        assert!(!r.attainable);
        let r = recall_at_precision(&[0.9, 0.8], &[0, 0], 0.5);
        assert!(!r.attainable);
        assert_eq!(r.recall, 0.0);
        let r = recall_at_precision(&[0.9, 0.9], &[0, 1], 0.9);
        assert!(!r.attainable);
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucket_index(0), None);
        assert_eq!(bucket_index(1), Some(1));
        assert_eq!(bucket_index(3), Some(1));
        assert_eq!(bucket_index(10), Some(1));
        assert_eq!(bucket_index(11), Some(2));
        assert_eq!(bucket_index(1000), Some(3));
        assert_eq!(bucket_index(1001), Some(4));
    }
}
