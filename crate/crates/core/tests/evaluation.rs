mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::brute_force_auc;
use conceptmatch::conceptualize;
use conceptmatch::evaluation::{
    auc, bucket_index, bucket_test_set, gen_accuracy, mention_frequencies, run_experiments_on, EvalConfig, EvalInputs,
    GenMode, GenModels,
};
use conceptmatch::world::{World, WorldConfig};
use conceptmatch::Tokens;
use proptest::prelude::*;

fn small_world_config(seed: u64) -> WorldConfig {
    WorldConfig {
        n_pairs: 2000,
        n_keywords: 600,
        n_queries: 400,
        n_disc_train: 800,
        n_disc_dev: 300,
        n_disc_test: 300,
        seed,
        ..WorldConfig::default()
    }
}

proptest! {
    #[test]
    fn auc_matches_pairwise_count(
        data in prop::collection::vec((0u8..30, 0u8..2), 2..200)
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 30.0).collect();
        let labels: Vec<u8> = data.iter().map(|(_, l)| *l).collect();
        let both = labels.contains(&0) && labels.contains(&1);
        match auc(&scores, &labels) {
            Ok(v) => prop_assert_eq!(v, brute_force_auc(&scores, &labels)),
            Err(_) => prop_assert!(!both),
        }
    }
}

#[test]
fn auc_examples() {
    assert_eq!(auc(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap(), 0.75);
    assert_eq!(auc(&[0.9, 0.8, 0.2], &[1, 1, 0]).unwrap(), 1.0);
    assert_eq!(auc(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
    assert!(auc(&[0.5, 0.4], &[1, 1]).is_err());
}

#[test]
fn bucket_boundaries() {
    assert_eq!(bucket_index(0), None);
    assert_eq!(bucket_index(3), Some(1));
    assert_eq!(bucket_index(10), Some(1));
    assert_eq!(bucket_index(11), Some(2));
    assert_eq!(bucket_index(1000), Some(3));
    assert_eq!(bucket_index(1001), Some(4));
}

#[test]
fn default_world_fills_every_bucket_and_partitions_the_test_set() {
    let w = World::generate(&WorldConfig::default()).unwrap();
    let train: Vec<Tokens> = w.paraphrases.iter().map(|p| p.source.clone()).collect();
    let b = bucket_test_set(&w.test_queries, &train, &w.kb);
    assert!(b.sizes().iter().all(|&n| n > 0), "{:?}", b.sizes());
    assert_eq!(b.included() + b.excluded.len(), w.test_queries.len());
    let freq = mention_frequencies(&train, &w.kb);
    for (i, bucket) in b.buckets.iter().enumerate() {
        for q in bucket {
            assert_eq!(q.bucket, i + 1);
            assert_eq!(freq.get(&q.entity_id).copied(), Some(q.frequency));
            assert_eq!(bucket_index(q.frequency), Some(q.bucket));
        }
    }
}

#[test]
fn two_entity_queries_are_excluded() {
    let w = World::generate(&small_world_config(3)).unwrap();
    let mut two = w.paraphrases[0].source.clone();
    two.extend(w.paraphrases[1].source.iter().cloned());
    let train: Vec<Tokens> = w.paraphrases.iter().map(|p| p.source.clone()).collect();
    let b = bucket_test_set(&[two], &train, &w.kb);
    assert_eq!(b.included(), 0);
    assert_eq!(b.excluded.len(), 1);
}

#[test]
fn single_template_world_has_one_pattern() {
    let w = World::generate(&WorldConfig {
        n_templates: 1,
        group_size: 1,
        ..small_world_config(1)
    })
    .unwrap();
    let mut patterns: BTreeMap<String, usize> = BTreeMap::new();
    for p in &w.paraphrases {
        for side in [&p.source, &p.target] {
            *patterns.entry(conceptualize(side, &w.kb).render()).or_default() += 1;
        }
    }
    assert_eq!(patterns.len(), 1, "{patterns:?}");
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn same_seed_writes_identical_files() {
    let cfg = small_world_config(5);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    World::generate(&cfg).unwrap().write_dir(a.path()).unwrap();
    World::generate(&cfg).unwrap().write_dir(b.path()).unwrap();
    let (ca, cb) = (dir_contents(a.path()), dir_contents(b.path()));
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
    let c = tempfile::tempdir().unwrap();
    World::generate(&small_world_config(6))
        .unwrap()
        .write_dir(c.path())
        .unwrap();
    assert_ne!(ca, dir_contents(c.path()));
}

#[test]
fn written_world_reads_back_to_the_same_inputs() {
    let w = World::generate(&small_world_config(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    w.write_dir(dir.path()).unwrap();
    let from_disk = EvalInputs::read_dir(dir.path()).unwrap();
    let direct = EvalInputs::from_world(&w);
    assert_eq!(from_disk.paraphrases, direct.paraphrases);
    assert_eq!(from_disk.test_queries, direct.test_queries);
    assert_eq!(from_disk.disc_test_longtail, direct.disc_test_longtail);
}

#[test]
fn identical_models_score_identically() {
    let w = World::generate(&small_world_config(4)).unwrap();
    let inputs = EvalInputs::from_world(&w);
    let cfg = EvalConfig::default();
    let train: Vec<Tokens> = inputs.paraphrases.iter().map(|p| p.source.clone()).collect();
    let buckets = bucket_test_set(&inputs.test_queries, &train, &inputs.kb);
    let a = GenModels::train(&inputs.paraphrases, &inputs.kb, &cfg.train).unwrap();
    let b = GenModels::train(&inputs.paraphrases, &inputs.kb, &cfg.train).unwrap();
    for mode in [GenMode::Raw, GenMode::Conceptual] {
        let model = |m: &GenModels| match mode {
            GenMode::Raw => m.raw.clone(),
            GenMode::Conceptual => m.conceptual.clone(),
        };
        let x = gen_accuracy(&buckets, &model(&a), mode, &inputs.kb, &inputs.oracle, &cfg.decode);
        let y = gen_accuracy(&buckets, &model(&b), mode, &inputs.kb, &inputs.oracle, &cfg.decode);
        assert_eq!(x, y);
    }
}

#[test]
fn report_covers_every_sweep_proportion_and_is_deterministic() {
    let w = World::generate(&small_world_config(8)).unwrap();
    let inputs = EvalInputs::from_world(&w);
    let cfg = EvalConfig::default();
    let a = run_experiments_on(&inputs, &cfg).unwrap();
    let b = run_experiments_on(&inputs, &cfg).unwrap();
    assert_eq!(a.sweep.len(), 4);
    let props: Vec<f64> = a.sweep.iter().map(|r| r.proportion).collect();
    assert_eq!(props, vec![0.08, 0.10, 0.12, 0.16]);
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    assert!(a.to_markdown().contains("Recall"));
    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("report.md").exists());
}
