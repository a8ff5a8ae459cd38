//! Decision thresholds at a target precision.

use serde::Serialize;

/// Outcome of thresholding at the smallest score whose `>=` precision meets
/// the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Smallest observed score `t` such that the pairs scoring `>= t` reach
/// `precision_target`; that choice also maximizes recall. `None` when no
/// threshold attains the target.
pub fn operating_point(scores: &[f64], labels: &[u8], precision_target: f64) -> Option<OperatingPoint> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = None;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        if precision >= precision_target {
            best = Some(OperatingPoint {
                threshold: s,
                precision,
                recall: tp as f64 / positives as f64,
            });
        }
    }
    best
}

pub fn calibrate_threshold(scores: &[f64], labels: &[u8], precision_target: f64) -> Option<f64> {
    operating_point(scores, labels, precision_target).map(|p| p.threshold)
}
