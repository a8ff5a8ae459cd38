use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{auc, bucket_test_set, recall_at_precision, FrequencyBuckets, RecallAtPrecision, BUCKET_LABELS};
use crate::conceptualizer::{conceptualize, instantiate, Pattern};
use crate::config::KeyValues;
use crate::corpus::{read_paraphrases, strict_alignment_filter, Alignment, ParaphrasePair, PatternPair};
use crate::discriminator::{
    augment_dataset, read_labeled_pairs, score_pairs, train_classifier, AugmentationConfig, LabeledPair, TrainHyper,
};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::{self, Tokens};
use crate::translation::{train_model, train_on_sentences, DecodeConfig, TrainConfig, TranslationModel};
use crate::world::{self, SynonymyOracle, World, WorldConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    /// Generated in memory from `world` when absent.
    pub world_dir: Option<PathBuf>,
    pub world: WorldConfig,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    pub hyper: TrainHyper,
    /// Proportion used for the augmented discriminator.
    pub proportion: f64,
    pub sweep: Vec<f64>,
    pub precision_global: f64,
    pub precision_longtail: f64,
    pub augment_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            world_dir: None,
            world: WorldConfig::default(),
            train: TrainConfig::default(),
            decode: DecodeConfig {
                beam: 10,
                ..DecodeConfig::default()
            },
            hyper: TrainHyper::default(),
            proportion: 0.12,
            sweep: vec![0.08, 0.10, 0.12, 0.16],
            precision_global: 0.95,
            precision_longtail: 0.70,
            augment_seed: 11,
        }
    }
}

const EVAL_KEYS: [&str; 17] = [
    "world_dir",
    "ngram",
    "max_phrase_len",
    "em_iterations",
    "beam",
    "stack_size",
    "table_limit",
    "learning_rate",
    "epochs",
    "batch",
    "l2",
    "train_seed",
    "proportion",
    "sweep",
    "precision_global",
    "precision_longtail",
    "augment_seed",
];

impl EvalConfig {
    /// Flat `key=value` settings; world generator keys are accepted too.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let known: Vec<&str> = EVAL_KEYS.iter().chain(WorldConfig::KEYS.iter()).copied().collect();
        kv.check_keys(&known)?;
        let d = Self::default();
        let cfg = Self {
            world_dir: kv.get_str("world_dir").map(PathBuf::from),
            world: WorldConfig::from_key_values(kv)?,
            train: TrainConfig {
                ngram: kv.get_or("ngram", d.train.ngram)?,
                max_phrase_len: kv.get_or("max_phrase_len", d.train.max_phrase_len)?,
                em_iterations: kv.get_or("em_iterations", d.train.em_iterations)?,
            },
            decode: DecodeConfig {
                beam: kv.get_or("beam", d.decode.beam)?,
                stack_size: kv.get_or("stack_size", d.decode.stack_size)?,
                table_limit: kv.get_or("table_limit", d.decode.table_limit)?,
            },
            hyper: TrainHyper {
                learning_rate: kv.get_or("learning_rate", d.hyper.learning_rate)?,
                epochs: kv.get_or("epochs", d.hyper.epochs)?,
                batch: kv.get_or("batch", d.hyper.batch)?,
                l2: kv.get_or("l2", d.hyper.l2)?,
                seed: kv.get_or("train_seed", d.hyper.seed)?,
            },
            proportion: kv.get_or("proportion", d.proportion)?,
            sweep: kv.get_list("sweep")?.unwrap_or(d.sweep),
            precision_global: kv.get_or("precision_global", d.precision_global)?,
            precision_longtail: kv.get_or("precision_longtail", d.precision_longtail)?,
            augment_seed: kv.get_or("augment_seed", d.augment_seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.decode.beam == 0 || self.decode.stack_size == 0 {
            return Err(Error::Config("beam and stack_size must be at least 1".into()));
        }
        for p in [self.precision_global, self.precision_longtail] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("precision target {p} outside [0, 1]")));
            }
        }
        for &p in self.sweep.iter().chain(std::iter::once(&self.proportion)) {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::Config(format!("augmentation proportion {p} outside [0, 0.5]")));
            }
        }
        Ok(())
    }
}

/// Everything an experiment run reads.
#[derive(Debug, Clone)]
pub struct EvalInputs {
    pub kb: KnowledgeBase,
    pub paraphrases: Vec<ParaphrasePair>,
    pub test_queries: Vec<Tokens>,
    pub oracle: SynonymyOracle,
    pub disc_train: Vec<LabeledPair>,
    pub disc_dev: Vec<LabeledPair>,
    pub disc_test_global: Vec<LabeledPair>,
    pub disc_test_longtail: Vec<LabeledPair>,
}

impl EvalInputs {
    pub fn from_world(w: &World) -> Self {
        Self {
            kb: w.kb.clone(),
            paraphrases: w.paraphrases.clone(),
            test_queries: w.test_queries.clone(),
            oracle: w.oracle(),
            disc_train: w.disc_train.clone(),
            disc_dev: w.disc_dev.clone(),
            disc_test_global: w.disc_test_global.clone(),
            disc_test_longtail: w.disc_test_longtail.clone(),
        }
    }

    /// Reads a directory laid out by `World::write_dir`.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let lines = |name: &str| -> Result<Vec<Tokens>> {
            let path = dir.join(name);
            let contents = text::read_to_string(&path)?;
            Ok(text::data_lines(&contents).map(|(_, l)| text::tokenize(l)).collect())
        };
        Ok(Self {
            kb: KnowledgeBase::load_dir(&dir.join(world::KB_DIR))?,
            paraphrases: read_paraphrases(&dir.join(world::PARAPHRASES_FILE))?,
            test_queries: lines(world::TEST_QUERIES_FILE)?,
            oracle: SynonymyOracle::read(&dir.join(world::ORACLE_FILE))?,
            disc_train: read_labeled_pairs(&dir.join(world::DISC_TRAIN_FILE))?,
            disc_dev: read_labeled_pairs(&dir.join(world::DISC_DEV_FILE))?,
            disc_test_global: read_labeled_pairs(&dir.join(world::DISC_TEST_GLOBAL_FILE))?,
            disc_test_longtail: read_labeled_pairs(&dir.join(world::DISC_TEST_LONGTAIL_FILE))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    /// Decode the sentence itself.
    Raw,
    /// Decode the query pattern and refill its slots with the query's surfaces.
    Conceptual,
}

#[derive(Debug, Clone)]
pub struct GenModels {
    pub raw: TranslationModel,
    pub conceptual: TranslationModel,
    /// Pairs kept by strict alignment; both models train on exactly these.
    pub kept_pairs: usize,
}

impl GenModels {
    pub fn train(pairs: &[ParaphrasePair], kb: &KnowledgeBase, cfg: &TrainConfig) -> Result<Self> {
        let judged: Vec<Option<(PatternPair, (Tokens, Tokens))>> = pairs
            .par_iter()
            .map(|p| {
                let source = conceptualize(&p.source, kb);
                let target = conceptualize(&p.target, kb);
                match strict_alignment_filter(&source, &target) {
                    Alignment::Keep => Some((PatternPair { source, target }, (p.source.clone(), p.target.clone()))),
                    Alignment::Reject(_) => None,
                }
            })
            .collect();
        let (patterns, sentences): (Vec<PatternPair>, Vec<(Tokens, Tokens)>) = judged.into_iter().flatten().unzip();
        if patterns.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let (conceptual, raw) = rayon::join(|| train_model(&patterns, cfg), || train_on_sentences(&sentences, cfg));
        Ok(Self {
            raw: raw?,
            conceptual: conceptual?,
            kept_pairs: patterns.len(),
        })
    }
}

/// Binds each target slot to the surface of the query slot with the same
/// concept and occurrence.
fn bind_surfaces(query: &Pattern, target: &Pattern) -> Option<Vec<Vec<Tokens>>> {
    let query_slots: Vec<(&str, usize)> = query.slots().collect();
    target
        .slots()
        .map(|slot| {
            let k = query_slots.iter().position(|&q| q == slot)?;
            Some(vec![query.slot_values[k].surface.clone()])
        })
        .collect()
}

/// First n-best output that differs from the query, or `None`.
pub fn top_rewrite(
    model: &TranslationModel,
    query: &[String],
    mode: GenMode,
    kb: &KnowledgeBase,
    decode: &DecodeConfig,
) -> Option<Tokens> {
    match mode {
        GenMode::Raw => model
            .decode(query, decode)
            .candidates
            .into_iter()
            .map(|c| c.tokens)
            .find(|t| t.as_slice() != query),
        GenMode::Conceptual => {
            let qp = conceptualize(query, kb);
            model.decode(&qp.tokens(), decode).candidates.iter().find_map(|c| {
                let target = Pattern::from_tokens(&c.tokens);
                let bindings = bind_surfaces(&qp, &target)?;
                instantiate(&target, &bindings)
                    .ok()?
                    .into_iter()
                    .next()
                    .filter(|s| s.as_slice() != query)
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketAccuracy {
    pub buckets: Vec<String>,
    pub total: [usize; 4],
    pub correct: [usize; 4],
    pub accuracy: [f64; 4],
}

/// Top-1 oracle accuracy per bucket. Queries are judged in parallel and
/// reduced in input order.
pub fn gen_accuracy(
    buckets: &FrequencyBuckets,
    model: &TranslationModel,
    mode: GenMode,
    kb: &KnowledgeBase,
    oracle: &SynonymyOracle,
    decode: &DecodeConfig,
) -> BucketAccuracy {
    let mut total = [0; 4];
    let mut correct = [0; 4];
    for (b, bucket) in buckets.buckets.iter().enumerate() {
        let verdicts: Vec<bool> = bucket
            .par_iter()
            .map(|q| {
                top_rewrite(model, &q.query, mode, kb, decode)
                    .is_some_and(|out| oracle.is_synonymous(&q.query, &out, kb))
            })
            .collect();
        total[b] = verdicts.len();
        correct[b] = verdicts.iter().filter(|&&v| v).count();
    }
    let accuracy = [0, 1, 2, 3].map(|b| {
        if total[b] == 0 {
            0.0
        } else {
            correct[b] as f64 / total[b] as f64
        }
    });
    BucketAccuracy {
        buckets: BUCKET_LABELS.iter().map(|s| s.to_string()).collect(),
        total,
        correct,
        accuracy,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminatorMetrics {
    pub train_size: usize,
    pub augmented: usize,
    pub auc_global: f64,
    pub recall_global: RecallAtPrecision,
    pub auc_longtail: f64,
    pub recall_longtail: RecallAtPrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub proportion: f64,
    pub metrics: DiscriminatorMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Throughput {
    pub queries: usize,
    pub hypotheses: usize,
    pub seconds: f64,
    pub queries_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub kept_pairs: usize,
    pub bucket_sizes: [usize; 4],
    pub excluded_queries: usize,
    pub raw: BucketAccuracy,
    pub conceptual: BucketAccuracy,
    pub baseline: DiscriminatorMetrics,
    pub augmented: DiscriminatorMetrics,
    pub sweep: Vec<SweepRow>,
    /// Wall-clock measurement; the only nondeterministic field.
    pub throughput: Throughput,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the throughput block, identical across runs with
    /// identical configuration.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("throughput");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let pct = |x: f64| format!("{:.1}", 100.0 * x);
        let rec = |r: &RecallAtPrecision| {
            if r.attainable {
                pct(r.recall)
            } else {
                "0.0 (unattainable)".to_string()
            }
        };
        let mut md = String::from("# Evaluation report\n\n## Generation accuracy by entity frequency\n\n");
        md.push_str("| model | ");
        md.push_str(&BUCKET_LABELS.join(" | "));
        md.push_str(" |\n|---|---|---|---|---|\n");
        for (name, acc) in [("raw", &self.raw), ("conceptual", &self.conceptual)] {
            let cells: Vec<String> = (0..4)
                .map(|b| format!("{} ({}/{})", pct(acc.accuracy[b]), acc.correct[b], acc.total[b]))
                .collect();
            let _ = writeln!(md, "| {name} | {} |", cells.join(" | "));
        }
        let _ = writeln!(
            md,
            "\nStrictly aligned training pairs: {}. Excluded test queries: {}.\n",
            self.kept_pairs, self.excluded_queries
        );
        let _ = writeln!(
            md,
            "## Discriminator\n\n| model | train | AUC-G | Recall-G@{} | AUC-L | Recall-L@{} |\n|---|---|---|---|---|---|",
            pct(self.config.precision_global),
            pct(self.config.precision_longtail)
        );
        let row = |name: &str, m: &DiscriminatorMetrics| {
            format!(
                "| {name} | {} | {:.4} | {} | {:.4} | {} |",
                m.train_size + m.augmented,
                m.auc_global,
                rec(&m.recall_global),
                m.auc_longtail,
                rec(&m.recall_longtail)
            )
        };
        let _ = writeln!(md, "{}", row("baseline", &self.baseline));
        let _ = writeln!(md, "{}", row("augmented", &self.augmented));
        md.push_str("\n## Augmentation proportion sweep\n\n| proportion | augmented | Recall-L | Recall-G |\n|---|---|---|---|\n");
        for r in &self.sweep {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                pct(r.proportion),
                r.metrics.augmented,
                rec(&r.metrics.recall_longtail),
                rec(&r.metrics.recall_global)
            );
        }
        let t = &self.throughput;
        let _ = writeln!(
            md,
            "\n## Decoding throughput\n\n{} queries, {} hypotheses in {:.3} s ({:.1} queries/s).",
            t.queries, t.hypotheses, t.seconds, t.queries_per_second
        );
        md
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        text::write_string(&dir.join("report.json"), &(self.to_json() + "\n"))?;
        text::write_string(&dir.join("report.md"), &self.to_markdown())
    }
}

fn labels(pairs: &[LabeledPair]) -> Vec<u8> {
    pairs.iter().map(|p| p.label).collect()
}

/// Trains on `train` plus `proportion` augmentation and scores both test sets.
pub fn discriminator_metrics(
    inputs: &EvalInputs,
    cfg: &EvalConfig,
    proportion: Option<f64>,
) -> Result<DiscriminatorMetrics> {
    let mut train = inputs.disc_train.clone();
    let mut augmented = 0;
    if let Some(p) = proportion {
        let acfg = AugmentationConfig {
            proportion: p,
            ..AugmentationConfig::default()
        };
        let aug = augment_dataset(&inputs.disc_train, &inputs.kb, &acfg, cfg.augment_seed)?;
        augmented = aug.pairs.len();
        train.extend(aug.pairs);
    }
    let model = train_classifier(&train, &inputs.kb, &cfg.hyper)?;
    let g_scores = score_pairs(&model, &inputs.disc_test_global, &inputs.kb);
    let g_labels = labels(&inputs.disc_test_global);
    let l_scores = score_pairs(&model, &inputs.disc_test_longtail, &inputs.kb);
    let l_labels = labels(&inputs.disc_test_longtail);
    Ok(DiscriminatorMetrics {
        train_size: inputs.disc_train.len(),
        augmented,
        auc_global: auc(&g_scores, &g_labels)?,
        recall_global: recall_at_precision(&g_scores, &g_labels, cfg.precision_global),
        auc_longtail: auc(&l_scores, &l_labels)?,
        recall_longtail: recall_at_precision(&l_scores, &l_labels, cfg.precision_longtail),
    })
}

/// Decodes every bucketed query once with the conceptual model and times it.
fn measure_throughput(
    buckets: &FrequencyBuckets,
    models: &GenModels,
    kb: &KnowledgeBase,
    decode: &DecodeConfig,
) -> Throughput {
    let patterns: Vec<Tokens> = buckets
        .buckets
        .iter()
        .flatten()
        .map(|q| conceptualize(&q.query, kb).tokens())
        .collect();
    let start = Instant::now();
    let hypotheses: usize = patterns
        .par_iter()
        .map(|p| models.conceptual.decode(p, decode).len())
        .sum();
    let seconds = start.elapsed().as_secs_f64();
    Throughput {
        queries: patterns.len(),
        hypotheses,
        seconds,
        queries_per_second: if seconds > 0.0 {
            patterns.len() as f64 / seconds
        } else {
            0.0
        },
    }
}

pub fn run_experiments_on(inputs: &EvalInputs, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let train_queries: Vec<Tokens> = inputs.paraphrases.iter().map(|p| p.source.clone()).collect();
    let buckets = bucket_test_set(&inputs.test_queries, &train_queries, &inputs.kb);
    let models = GenModels::train(&inputs.paraphrases, &inputs.kb, &cfg.train)?;
    let raw = gen_accuracy(
        &buckets,
        &models.raw,
        GenMode::Raw,
        &inputs.kb,
        &inputs.oracle,
        &cfg.decode,
    );
    let conceptual = gen_accuracy(
        &buckets,
        &models.conceptual,
        GenMode::Conceptual,
        &inputs.kb,
        &inputs.oracle,
        &cfg.decode,
    );
    let throughput = measure_throughput(&buckets, &models, &inputs.kb, &cfg.decode);
    let baseline = discriminator_metrics(inputs, cfg, None)?;
    let augmented = discriminator_metrics(inputs, cfg, Some(cfg.proportion))?;
    let sweep = cfg
        .sweep
        .iter()
        .map(|&p| {
            Ok(SweepRow {
                proportion: p,
                metrics: discriminator_metrics(inputs, cfg, Some(p))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        config: cfg.clone(),
        kept_pairs: models.kept_pairs,
        bucket_sizes: buckets.sizes(),
        excluded_queries: buckets.excluded.len(),
        raw,
        conceptual,
        baseline,
        augmented,
        sweep,
        throughput,
    })
}

/// Loads `world_dir` or generates the configured world, then runs every
/// experiment.
pub fn run_experiments(cfg: &EvalConfig) -> Result<EvalReport> {
    let inputs = match &cfg.world_dir {
        Some(dir) => EvalInputs::read_dir(dir)?,
        None => EvalInputs::from_world(&World::generate(&cfg.world)?),
    };
    run_experiments_on(&inputs, cfg)
}
