mod common;

use common::{central_difference, random_feature_vector, rel_err, toks, Fig2};
use conceptmatch::discriminator::{
    augment_dataset, calibrate_model, extract_features, loss_and_gradient, operating_point, predict_score,
    train_classifier, train_on_features, AugmentationConfig, ClassifierModel, FeatureVector, LabeledPair, Origin,
    TrainHyper, DENSE_DIM, FEATURE_DIM,
};
use conceptmatch::world::{World, WorldConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn identical_pair_features() {
    let f = Fig2::load();
    let q = toks("how much does liposuction cost in new york");
    let x = extract_features(&q, &q, &f.kb);
    for name in ["token_jaccard", "edit_similarity", "pattern_equal", "slot_agreement"] {
        assert_eq!(x.get(name), Some(1.0), "{name}");
    }
}

#[test]
fn alias_resolved_slots_agree() {
    let f = Fig2::load();
    let x = extract_features(
        &toks("how much does liposuction cost in new york"),
        &toks("the price of lipo in new york"),
        &f.kb,
    );
    assert_eq!(x.get("pattern_equal"), Some(0.0));
    assert_eq!(x.get("slot_agreement"), Some(1.0));
    assert_eq!(x.get("slot_disagreement"), Some(0.0));
}

#[test]
fn different_entities_disagree() {
    let f = Fig2::load();
    let x = extract_features(
        &toks("the price of liposuction in denver"),
        &toks("the price of rhinoplasty in denver"),
        &f.kb,
    );
    assert_eq!(x.get("pattern_equal"), Some(1.0));
    assert_eq!(x.get("slot_agreement"), Some(0.5));
    assert_eq!(x.get("slot_disagreement"), Some(1.0));
    let y = extract_features(
        &toks("the price of liposuction"),
        &toks("the price of rhinoplasty"),
        &f.kb,
    );
    assert_eq!(y.get("slot_agreement"), Some(0.0));
    assert_eq!(y.get("slot_disagreement"), Some(1.0));
}

fn desk_world() -> World {
    World::generate(&WorldConfig {
        n_disc_train: 460,
        n_disc_dev: 200,
        n_disc_test: 200,
        n_pairs: 500,
        n_keywords: 300,
        n_queries: 200,
        ..WorldConfig::default()
    })
    .unwrap()
}

#[test]
fn augmentation_budget_is_rounded_proportion() {
    let w = desk_world();
    assert_eq!(w.disc_train.len(), 460);
    let cfg = AugmentationConfig {
        proportion: 0.12,
        ..AugmentationConfig::default()
    };
    let aug = augment_dataset(&w.disc_train, &w.kb, &cfg, 3).unwrap();
    assert_eq!(aug.diagnostics.budget, 55);
    assert_eq!(aug.pairs.len(), 55);
    assert!(aug.pairs.iter().all(|p| p.origin == Origin::Augmented));
    let zero = AugmentationConfig { proportion: 0.0, ..cfg };
    assert!(augment_dataset(&w.disc_train, &w.kb, &zero, 3)
        .unwrap()
        .pairs
        .is_empty());
}

#[test]
fn augmented_labels_agree_with_the_world_oracle() {
    let w = desk_world();
    let oracle = w.oracle();
    let aug = augment_dataset(&w.disc_train, &w.kb, &AugmentationConfig::default(), 9).unwrap();
    assert!(aug.pairs.iter().any(|p| p.label == 1));
    assert!(aug.pairs.iter().any(|p| p.label == 0));
    for p in &aug.pairs {
        assert_eq!(oracle.is_synonymous(&p.query, &p.keyword, &w.kb), p.label == 1, "{p:?}");
    }
}

#[test]
fn augmentation_is_deterministic_per_seed() {
    let w = desk_world();
    let cfg = AugmentationConfig::default();
    let a = augment_dataset(&w.disc_train, &w.kb, &cfg, 1).unwrap();
    let b = augment_dataset(&w.disc_train, &w.kb, &cfg, 1).unwrap();
    assert_eq!(a, b);
    assert!(augment_dataset(&w.disc_train, &w.kb, &AugmentationConfig { proportion: 0.6, ..cfg }, 1).is_err());
}

/// Best recall over every observed threshold whose `>=` precision meets the
/// target; the smallest such threshold on ties.
fn brute_operating_point(scores: &[f64], labels: &[u8], target: f64) -> Option<(f64, f64)> {
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let mut best: Option<(f64, f64)> = None;
    for &t in scores {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 1).count();
        let n = scores.iter().filter(|s| **s >= t).count();
        if positives == 0 || (tp as f64 / n as f64) < target {
            continue;
        }
        let recall = tp as f64 / positives as f64;
        best = match best {
            Some((bt, br)) if br > recall || (br == recall && bt <= t) => Some((bt, br)),
            _ => Some((t, recall)),
        };
    }
    best
}

#[test]
fn calibration_examples() {
    let p = operating_point(&[0.9, 0.8, 0.7], &[1, 0, 1], 0.95).unwrap();
    assert_eq!((p.threshold, p.recall), (0.9, 0.5));
    let sep = operating_point(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0], 0.95).unwrap();
    assert_eq!(sep.recall, 1.0);
    assert!(sep.threshold > 0.2);
    assert!(operating_point(&[0.3, 0.2], &[0, 0], 0.95).is_none());
}

proptest! {
    #[test]
    fn calibration_matches_threshold_sweep(
        data in prop::collection::vec((0u8..20, 0u8..2), 1..60),
        target in prop::sample::select(vec![0.5, 0.7, 0.9, 0.95]),
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 20.0).collect();
        let labels: Vec<u8> = data.iter().map(|(_, l)| *l).collect();
        let got = operating_point(&scores, &labels, target).map(|p| (p.threshold, p.recall));
        prop_assert_eq!(got, brute_operating_point(&scores, &labels, target));
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 1e-3;
    for _ in 0..20 {
        let n = rng.random_range(1..16);
        let xs: Vec<FeatureVector> = (0..n).map(|_| random_feature_vector(&mut rng)).collect();
        let ys: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let batch: Vec<(&FeatureVector, u8)> = xs.iter().zip(ys.iter().copied()).collect();
        let weights: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.random_range(-0.5..0.5)).collect();
        let bias = rng.random_range(-0.5..0.5);
        let l2 = rng.random_range(0.0..0.1);
        let (_, grad, grad_b) = loss_and_gradient(&weights, bias, &batch, l2);
        let mut coords: Vec<usize> = (0..DENSE_DIM).collect();
        coords.extend(xs.iter().flat_map(|x| x.hashed.iter().map(|&i| i as usize)));
        coords.extend((0..5).map(|_| rng.random_range(DENSE_DIM..FEATURE_DIM)));
        for i in coords {
            let numeric = central_difference(
                |d| {
                    let mut w = weights.clone();
                    w[i] += d;
                    loss_and_gradient(&w, bias, &batch, l2).0
                },
                h,
            );
            assert!(rel_err(grad[i], numeric) < 1e-5, "coord {i}: {} vs {numeric}", grad[i]);
        }
        let numeric_b = central_difference(|d| loss_and_gradient(&weights, bias + d, &batch, l2).0, h);
        assert!(rel_err(grad_b, numeric_b) < 1e-5);
    }
}

#[test]
fn zero_epochs_score_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data: Vec<(FeatureVector, u8)> = (0..10)
        .map(|i| (random_feature_vector(&mut rng), (i % 2) as u8))
        .collect();
    let model = train_on_features(
        &data,
        &TrainHyper {
            epochs: 0,
            ..TrainHyper::default()
        },
    )
    .unwrap();
    assert!(data.iter().all(|(x, _)| model.score(x) == 0.5));
    assert_eq!(ClassifierModel::zero().score(&data[0].0), 0.5);
}

#[test]
fn separable_toy_set_is_fit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<(FeatureVector, u8)> = (0..10)
        .map(|i| {
            let mut x = random_feature_vector(&mut rng);
            let y = (i % 2) as u8;
            x.dense[0] = if y == 1 { 1.0 } else { -1.0 };
            (x, y)
        })
        .collect();
    let model = train_on_features(
        &data,
        &TrainHyper {
            epochs: 200,
            batch: 0,
            ..TrainHyper::default()
        },
    )
    .unwrap();
    let correct = data
        .iter()
        .filter(|(x, y)| (model.score(x) >= 0.5) == (*y == 1))
        .count();
    assert_eq!(correct, data.len());
}

#[test]
fn identical_features_learn_the_class_prior() {
    let x = FeatureVector {
        dense: [0.5; DENSE_DIM],
        hashed: vec![DENSE_DIM as u32 + 3],
    };
    let data: Vec<(FeatureVector, u8)> = (0..20).map(|i| (x.clone(), u8::from(i < 6))).collect();
    let model = train_on_features(
        &data,
        &TrainHyper {
            epochs: 500,
            batch: 0,
            ..TrainHyper::default()
        },
    )
    .unwrap();
    assert!((model.score(&x) - 0.3).abs() < 0.01, "{}", model.score(&x));
}

#[test]
fn single_class_training_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data: Vec<(FeatureVector, u8)> = (0..4).map(|_| (random_feature_vector(&mut rng), 1)).collect();
    assert!(train_on_features(&data, &TrainHyper::default()).is_err());
}

fn trained_desk_model(w: &World) -> ClassifierModel {
    train_classifier(&w.disc_train, &w.kb, &TrainHyper::default()).unwrap()
}

#[test]
fn trained_model_accepts_identical_pairs_and_round_trips() {
    let w = desk_world();
    let mut model = trained_desk_model(&w);
    let q: &LabeledPair = w.disc_test_global.iter().find(|p| p.label == 1).unwrap();
    assert!(predict_score(&model, &q.query, &q.query, &w.kb) > 0.5);
    let unattainable = calibrate_model(&mut model, &w.disc_dev, &w.kb, &[0.7, 0.95]);
    assert!(unattainable.is_empty());
    assert!(model.threshold(0.95).is_some());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    assert_eq!(ClassifierModel::load(&path).unwrap(), model);
}
