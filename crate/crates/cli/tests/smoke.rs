//! End-to-end runs of every subcommand on the bundled fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/fig2")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conceptmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("config: {"), "no config echo for {args:?}: {stderr}");
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

const QUERY: &str = "how much does liposuction cost in new york";

#[test]
fn no_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["validate-kb", "--bogus"]).status.code(), Some(1));
}

#[test]
fn missing_kb_file_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--kb-dir", p(dir.path()), "validate-kb"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("taxonomy.tsv"));
}

#[test]
fn validate_kb_summarizes() {
    let kb = fixture().join("kb");
    let out = ok(&["--kb-dir", p(&kb), "validate-kb"]);
    assert!(out.contains("entities\t5\n"), "{out}");
    assert!(out.contains("core_concepts\t2\n"), "{out}");
}

#[test]
fn conceptualize_writes_patterns() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.txt");
    std::fs::write(&input, format!("{QUERY}\nnothing to tag here\n")).unwrap();
    let out = ok(&["--kb-dir", p(&f.join("kb")), "conceptualize", "--input", p(&input)]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "how much does [aesthetic_surgery] cost in [location]\taesthetic_surgery:liposuction:liposuction;location:new_york:new york"
    );
    assert_eq!(lines[1], "nothing to tag here\t");
}

#[test]
fn corpus_translator_repo_cache_and_match_chain() {
    let f = fixture();
    let kb = f.join("kb");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pairs = d.join("pattern-pairs.tsv");
    ok(&[
        "--kb-dir",
        p(&kb),
        "build-corpus",
        "--pairs",
        p(&f.join("paraphrases.tsv")),
        "--output",
        p(&pairs),
    ]);
    let corpus = std::fs::read_to_string(&pairs).unwrap();
    // the last paraphrase names a different surgery on each side
    assert_eq!(corpus.lines().count(), 3, "{corpus}");

    let model = d.join("model");
    ok(&[
        "train-translator",
        "--pairs",
        p(&pairs),
        "--out",
        p(&model),
        "--ngram",
        "2",
        "--em-iters",
        "3",
    ]);
    assert!(model.join("phrase-table.tsv").is_file());

    let repo = d.join("repo");
    ok(&[
        "--kb-dir",
        p(&kb),
        "build-repo",
        "--keywords",
        p(&f.join("keywords.txt")),
        "--clusters",
        p(&f.join("k2k-pairs.tsv")),
        "--out",
        p(&repo),
    ]);
    assert_eq!(
        std::fs::read_to_string(repo.join("clusters.tsv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    assert_eq!(
        std::fs::read_to_string(repo.join("patterns.tsv"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    let cache = d.join("cache.tsv");
    let fixture_model = f.join("model");
    ok(&[
        "--kb-dir",
        p(&kb),
        "build-cache",
        "--model-dir",
        p(&fixture_model),
        "--repo",
        p(&repo),
        "--queries",
        p(&f.join("queries.txt")),
        "--out",
        p(&cache),
    ]);
    let cached = std::fs::read_to_string(&cache).unwrap();
    assert!(cached.starts_with("# generation=1\n"), "{cached}");

    let k2k = f.join("k2k-pairs.tsv");
    let common = [
        "--kb-dir",
        p(&kb),
        "match",
        "--model-dir",
        p(&fixture_model),
        "--repo",
        p(&repo),
        "--clusters",
        p(&k2k),
    ];
    let cold = ok(&[&common[..], &["--query", QUERY]].concat());
    let warm = ok(&[&common[..], &["--query", QUERY, "--cache", p(&cache)]].concat());
    assert_eq!(cold, warm);
    assert!(cold.starts_with("the price of liposuction in new york\t"), "{cold}");

    let trace = ok(&[
        &common[..],
        &["--query", QUERY, "--trace", "json", "--cache", p(&cache)],
    ]
    .concat());
    let v: serde_json::Value = serde_json::from_str(&trace).unwrap();
    assert_eq!(v["cache"], "hit");

    let batch = d.join("candidates.tsv");
    ok(&[
        &common[..],
        &["--input", p(&f.join("queries.txt")), "--output", p(&batch)],
    ]
    .concat());
    let rows = std::fs::read_to_string(&batch).unwrap();
    assert!(rows.lines().all(|l| l.split('\t').count() == 4));
    assert!(rows.contains(&format!("{QUERY}\tthe price of lipo in nyc\t")));
}

#[test]
fn match_requires_a_query() {
    let f = fixture();
    let out = run(&[
        "--kb-dir",
        p(&f.join("kb")),
        "match",
        "--model-dir",
        p(&f.join("model")),
        "--repo",
        p(&f.join("keywords.txt")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn discriminator_train_and_score() {
    let f = fixture();
    let kb = f.join("kb");
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let pairs = f.join("labeled-pairs.tsv");
    ok(&[
        "--kb-dir",
        p(&kb),
        "--seed",
        "3",
        "train-discriminator",
        "--pairs",
        p(&pairs),
        "--dev",
        p(&pairs),
        "--augment-proportion",
        "0.2",
        "--out",
        p(&model),
    ]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(
        json["weights"].as_array().unwrap().len(),
        json["feature_names"].as_array().unwrap().len()
    );

    let scored = ok(&["--kb-dir", p(&kb), "score", "--model", p(&model), "--pairs", p(&pairs)]);
    assert_eq!(scored.lines().count(), 12);
    for line in scored.lines() {
        let s: f64 = line.split('\t').nth(2).unwrap().parse().unwrap();
        assert!(s > 0.0 && s < 1.0);
    }

    let unlabeled = dir.path().join("u.tsv");
    std::fs::write(&unlabeled, format!("{QUERY}\tthe price of lipo in new york\n")).unwrap();
    let one = ok(&[
        "--kb-dir",
        p(&kb),
        "score",
        "--model",
        p(&model),
        "--pairs",
        p(&unlabeled),
    ]);
    assert_eq!(one.lines().count(), 1);
}

const TINY_WORLD: &str = "n_entities=40\nn_templates=8\nn_pairs=800\nn_keywords=100\nn_queries=100\n\
n_disc_train=300\nn_disc_dev=100\nn_disc_test=200\ntest_per_template=1\n";

#[test]
fn gen_world_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("world.conf");
    std::fs::write(&conf, TINY_WORLD).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["--seed", "5", "gen-world", "--config", p(&conf), "--out", p(out)]);
    }
    for name in [
        "paraphrases.tsv",
        "keywords.txt",
        "oracle.tsv",
        "disc-train.tsv",
        "kb/entities.tsv",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let kb = a.join("kb");
    ok(&["--kb-dir", p(&kb), "validate-kb"]);
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("eval.conf");
    std::fs::write(&conf, format!("{TINY_WORLD}beam=5\nepochs=5\nsweep=0.08,0.16\n")).unwrap();
    let out = dir.path().join("report");
    let md = ok(&["evaluate", "--config", p(&conf), "--out", p(&out)]);
    assert!(md.contains("# Evaluation report"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["sweep"].as_array().unwrap().len(), 2);
    assert!(out.join("report.md").is_file());
}

#[test]
fn evaluate_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("eval.conf");
    std::fs::write(&conf, "beams=5\n").unwrap();
    let out = run(&["evaluate", "--config", p(&conf), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
