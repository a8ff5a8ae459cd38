use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use conceptmatch::conceptualizer::tag_with_diagnostics;
use conceptmatch::config::KeyValues;
use conceptmatch::corpus::{pattern_pairs_to_tsv, read_paraphrases, read_pattern_pairs};
use conceptmatch::discriminator::{
    augment_dataset, calibrate_model, labeled_pairs_to_tsv, parse_labeled_pairs, predict_score, read_labeled_pairs,
    train_classifier, AugmentationConfig, ClassifierModel, TrainHyper,
};
use conceptmatch::evaluation::{auc, run_experiments, EvalConfig};
use conceptmatch::matcher::{candidates_tsv, MatchConfig, Matcher};
use conceptmatch::repository::{
    build_cache, build_clusters, read_keyword_pairs, read_keywords, CacheSnapshot, KeywordRepository, SynonymClusters,
    DEFAULT_TOP_K,
};
use conceptmatch::text::{data_lines, read_to_string, tokenize, write_string};
use conceptmatch::translation::{train_model, DecodeConfig, TrainConfig, TranslationModel};
use conceptmatch::world::{World, WorldConfig};
use conceptmatch::{build_parallel_patterns, conceptualize, KnowledgeBase, Tokens};

use crate::{Cli, Command, Failure, Global};

type Outcome = Result<(), Failure>;

#[derive(Debug, Args, Serialize)]
pub struct ConceptualizeArgs {
    /// One sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildCorpusArgs {
    /// paraphrases.tsv: `source <TAB> target`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTranslatorArgs {
    /// pattern-pairs.tsv from build-corpus.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Model directory to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub ngram: usize,
    #[arg(long, default_value_t = 4)]
    pub max_phrase_len: usize,
    #[arg(long = "em-iters", default_value_t = 5)]
    pub em_iterations: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildRepoArgs {
    /// keywords.txt, one keyword per line.
    #[arg(long)]
    pub keywords: PathBuf,
    /// Keyword synonym pairs to cluster.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DecodeArgs {
    /// Hypotheses returned per query.
    #[arg(long, default_value_t = DecodeConfig::default().beam)]
    pub beam: usize,
    /// Hypotheses kept per decoder stack.
    #[arg(long, default_value_t = DecodeConfig::default().stack_size)]
    pub stack_size: usize,
    /// Phrase options kept per source span.
    #[arg(long, default_value_t = DecodeConfig::default().table_limit)]
    pub table_limit: usize,
}

impl DecodeArgs {
    fn config(&self) -> Result<DecodeConfig, Failure> {
        if self.beam == 0 || self.stack_size == 0 || self.table_limit == 0 {
            return Err(Failure::Usage(
                "--beam, --stack-size and --table-limit must be at least 1".into(),
            ));
        }
        Ok(DecodeConfig {
            beam: self.beam,
            stack_size: self.stack_size,
            table_limit: self.table_limit,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BuildCacheArgs {
    /// Model directory from train-translator.
    #[arg(long)]
    pub model_dir: PathBuf,
    /// keywords.txt or a build-repo directory.
    #[arg(long)]
    pub repo: PathBuf,
    /// Query log, one query per line.
    #[arg(long)]
    pub queries: PathBuf,
    /// Cache file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Most frequent query patterns to precompute.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Stored in the cache header.
    #[arg(long, default_value_t = 1)]
    pub generation: u64,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct MatchArgs {
    /// Model directory from train-translator.
    #[arg(long)]
    pub model_dir: PathBuf,
    /// keywords.txt or a build-repo directory.
    #[arg(long)]
    pub repo: PathBuf,
    /// Keyword synonym pairs.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Lookup cache from build-cache; frequent patterns skip decoding.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Single query; candidates go to standard output.
    #[arg(long, conflicts_with = "input")]
    pub query: Option<String>,
    /// Batch mode: one query per line.
    #[arg(long, requires = "output")]
    pub input: Option<PathBuf>,
    /// Batch output: `query <TAB> keyword <TAB> decoder_score <TAB> stage`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print the full retrieval trace instead of the candidate list.
    #[arg(long, value_enum)]
    pub trace: Option<TraceFormat>,
    #[arg(long, default_value_t = MatchConfig::default().max_candidates)]
    pub max_candidates: usize,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainDiscriminatorArgs {
    /// labeled-pairs.tsv: `query <TAB> keyword <TAB> label <TAB> match_type`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Calibration pairs; thresholds are stored per precision target.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, default_value_t = AugmentationConfig::default().proportion)]
    pub augment_proportion: f64,
    #[arg(long, default_value_t = AugmentationConfig::default().rare_frequency_threshold)]
    pub rare_threshold: usize,
    /// Also write the augmented pairs here.
    #[arg(long)]
    pub augmented_out: Option<PathBuf>,
    /// Precision targets to calibrate on the dev pairs.
    #[arg(long, value_delimiter = ',', default_values_t = [0.95, 0.70])]
    pub targets: Vec<f64>,
    #[arg(long, default_value_t = TrainHyper::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainHyper::default().epochs)]
    pub epochs: usize,
    /// Examples per update; 0 means full batch.
    #[arg(long, default_value_t = TrainHyper::default().batch)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainHyper::default().l2)]
    pub l2: f64,
    /// model.json to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// model.json from train-discriminator.
    #[arg(long)]
    pub model: PathBuf,
    /// `query <TAB> keyword`, optionally followed by label and match type.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Flat `key=value` configuration; defaults apply to absent keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for report.json and report.md.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GenWorldArgs {
    /// Flat `key=value` world configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_concepts: Option<usize>,
    #[arg(long)]
    pub n_entities: Option<usize>,
    #[arg(long)]
    pub n_templates: Option<usize>,
    #[arg(long)]
    pub n_pairs: Option<usize>,
    #[arg(long)]
    pub alias_rate: Option<f64>,
    #[arg(long)]
    pub zipf_exponent: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn echo<T: Serialize>(command: &str, global: &Global, effective: &T) {
    let v = serde_json::json!({ "command": command, "global": global, "effective": effective });
    eprintln!("config: {v}");
}

fn kb(global: &Global) -> Result<KnowledgeBase, Failure> {
    let dir = global
        .kb_dir
        .as_ref()
        .ok_or_else(|| Failure::Usage("--kb-dir is required for this command".into()))?;
    Ok(KnowledgeBase::load_dir(dir)?)
}

fn read_lines(path: &Path) -> Result<Vec<Tokens>, Failure> {
    let contents = read_to_string(path)?;
    Ok(data_lines(&contents).map(|(_, l)| tokenize(l)).collect())
}

fn emit(output: Option<&Path>, contents: &str) -> Outcome {
    match output {
        Some(path) => Ok(write_string(path, contents)?),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| Failure::Usage(format!("writing standard output: {e}")))
        }
    }
}

fn keywords_path(repo: &Path) -> PathBuf {
    if repo.is_dir() {
        repo.join("keywords.txt")
    } else {
        repo.to_path_buf()
    }
}

fn load_repo(repo: &Path, kb: &KnowledgeBase) -> Result<KeywordRepository, Failure> {
    Ok(KeywordRepository::build(read_keywords(&keywords_path(repo))?, kb))
}

pub fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::ValidateKb => validate_kb(g),
        Command::Conceptualize(a) => conceptualize_cmd(g, a),
        Command::BuildCorpus(a) => build_corpus(g, a),
        Command::TrainTranslator(a) => train_translator(g, a),
        Command::BuildRepo(a) => build_repo(g, a),
        Command::BuildCache(a) => build_cache_cmd(g, a),
        Command::Match(a) => match_cmd(g, a),
        Command::TrainDiscriminator(a) => train_discriminator(g, a),
        Command::Score(a) => score(g, a),
        Command::Evaluate(a) => evaluate(g, a),
        Command::GenWorld(a) => gen_world(g, a),
    }
}

fn validate_kb(g: &Global) -> Outcome {
    echo("validate-kb", g, &serde_json::json!({}));
    let kb = kb(g)?;
    let aliases: usize = kb.lexicon.iter().map(|e| e.aliases.len()).sum();
    let summary = format!(
        "concepts\t{}\ncore_concepts\t{}\nentities\t{}\naliases\t{}\n",
        kb.taxonomy.len(),
        kb.taxonomy.core_concepts().count(),
        kb.lexicon.len(),
        aliases
    );
    emit(None, &summary)
}

fn conceptualize_cmd(g: &Global, a: &ConceptualizeArgs) -> Outcome {
    echo("conceptualize", g, a);
    let kb = kb(g)?;
    let mut out = String::new();
    for s in read_lines(&a.input)? {
        let p = conceptualize(&s, &kb);
        if g.verbose {
            for amb in tag_with_diagnostics(&s, &kb).1 {
                eprintln!(
                    "ambiguous span {}..{} in `{}`: chose {} over {:?}",
                    amb.start,
                    amb.end,
                    s.join(" "),
                    amb.chosen,
                    amb.candidates
                );
            }
        }
        out.push_str(&format!("{}\t{}\n", p.render(), p.render_slot_values()));
    }
    emit(a.output.as_deref(), &out)
}

fn build_corpus(g: &Global, a: &BuildCorpusArgs) -> Outcome {
    echo("build-corpus", g, a);
    let kb = kb(g)?;
    let pairs = read_paraphrases(&a.pairs)?;
    let built = build_parallel_patterns(&pairs, &kb);
    write_string(&a.output, &pattern_pairs_to_tsv(&built.pairs))?;
    eprintln!("kept {} of {} pairs", built.pairs.len(), pairs.len());
    for (reason, n) in &built.rejected {
        eprintln!("rejected {}: {n}", reason.as_str());
    }
    Ok(())
}

fn train_translator(g: &Global, a: &TrainTranslatorArgs) -> Outcome {
    let cfg = TrainConfig {
        ngram: a.ngram,
        max_phrase_len: a.max_phrase_len,
        em_iterations: a.em_iterations,
    };
    echo("train-translator", g, &cfg);
    cfg.validate()?;
    let pairs = read_pattern_pairs(&a.pairs)?;
    let model = train_model(&pairs, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| {
        Failure::Data(conceptmatch::Error::Io {
            path: a.out.clone(),
            source: e,
        })
    })?;
    model.save(&a.out)?;
    eprintln!(
        "trained on {} pairs; {} phrase entries",
        pairs.len(),
        model.phrase_entries().len()
    );
    Ok(())
}

fn build_repo(g: &Global, a: &BuildRepoArgs) -> Outcome {
    echo("build-repo", g, a);
    let kb = kb(g)?;
    let repo = KeywordRepository::build(read_keywords(&a.keywords)?, &kb);
    write_string(&a.out.join("keywords.txt"), &repo.keywords_txt())?;
    let mut patterns = String::new();
    for p in repo.patterns() {
        let n = repo.keywords_for_pattern(p).map_or(0, |k| k.len());
        patterns.push_str(&format!("{}\t{n}\n", p.join(" ")));
    }
    write_string(&a.out.join("patterns.tsv"), &patterns)?;
    eprintln!("{} keywords, {} patterns", repo.len(), repo.pattern_count());
    if let Some(path) = &a.clusters {
        let built = build_clusters(&read_keyword_pairs(path)?, &repo);
        let lines: String = built
            .clusters
            .clusters()
            .iter()
            .map(|c| c.iter().map(|k| k.join(" ")).collect::<Vec<_>>().join("\t") + "\n")
            .collect();
        write_string(&a.out.join("clusters.tsv"), &lines)?;
        eprintln!(
            "{} clusters, {} pairs dropped",
            built.clusters.len(),
            built.dropped.len()
        );
        if g.verbose {
            for (x, y) in &built.dropped {
                eprintln!("dropped pair: {} | {}", x.join(" "), y.join(" "));
            }
        }
    }
    Ok(())
}

fn build_cache_cmd(g: &Global, a: &BuildCacheArgs) -> Outcome {
    echo("build-cache", g, a);
    let decode = a.decode.config()?;
    let kb = kb(g)?;
    let model = TranslationModel::load(&a.model_dir)?;
    let repo = load_repo(&a.repo, &kb)?;
    let queries = read_lines(&a.queries)?;
    let snapshot = build_cache(&queries, &kb, &model, &repo.trie(), &decode, a.top_k, a.generation);
    snapshot.write(&a.out)?;
    eprintln!("cached {} query patterns (generation {})", snapshot.len(), a.generation);
    Ok(())
}

fn match_cmd(g: &Global, a: &MatchArgs) -> Outcome {
    echo("match", g, a);
    let decode = a.decode.config()?;
    if a.query.is_none() && a.input.is_none() {
        return Err(Failure::Usage("match needs --query or --input".into()));
    }
    let kb = kb(g)?;
    let model = TranslationModel::load(&a.model_dir)?;
    let repo = load_repo(&a.repo, &kb)?;
    let trie = repo.trie();
    let clusters = match &a.clusters {
        Some(path) => {
            let built = build_clusters(&read_keyword_pairs(path)?, &repo);
            if !built.dropped.is_empty() {
                eprintln!(
                    "{} cluster pairs reference unknown keywords and were dropped",
                    built.dropped.len()
                );
            }
            built.clusters
        }
        None => SynonymClusters::default(),
    };
    let cache = a.cache.as_deref().map(CacheSnapshot::read).transpose()?;
    let cfg = MatchConfig {
        decode,
        use_cache: cache.is_some(),
        max_candidates: a.max_candidates,
    };
    let matcher = Matcher {
        kb: &kb,
        model: &model,
        repo: &repo,
        trie: &trie,
        clusters: &clusters,
    };
    let run = |q: &[String]| match &cache {
        Some(c) => matcher.retrieve_online(q, c, &cfg),
        None => matcher.retrieve(q, &cfg),
    };
    if let Some(q) = &a.query {
        let trace = run(&tokenize(q));
        let out = match a.trace {
            Some(TraceFormat::Json) => trace.to_json(),
            None => trace
                .candidates
                .iter()
                .map(|c| format!("{}\t{}\t{}\n", c.keyword, c.score, c.stage.as_str()))
                .collect(),
        };
        return emit(a.output.as_deref(), &out);
    }
    let input = a.input.as_ref().expect("checked above");
    let mut out = String::new();
    let mut traces = Vec::new();
    for q in read_lines(input)? {
        let trace = run(&q);
        out.push_str(&candidates_tsv(&trace));
        if a.trace.is_some() {
            traces.push(serde_json::to_value(&trace).map_err(conceptmatch::Error::from)?);
        }
    }
    emit(a.output.as_deref(), &out)?;
    if a.trace.is_some() {
        let json = serde_json::to_string_pretty(&traces).map_err(conceptmatch::Error::from)? + "\n";
        emit(None, &json)?;
    }
    Ok(())
}

fn train_discriminator(g: &Global, a: &TrainDiscriminatorArgs) -> Outcome {
    let seed = g.seed.unwrap_or(TrainHyper::default().seed);
    let hyper = TrainHyper {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch: a.batch,
        l2: a.l2,
        seed,
    };
    let augment = AugmentationConfig {
        proportion: a.augment_proportion,
        rare_frequency_threshold: a.rare_threshold,
        ..AugmentationConfig::default()
    };
    echo(
        "train-discriminator",
        g,
        &serde_json::json!({ "args": a, "hyper": hyper, "augmentation": augment, "seed": seed }),
    );
    let kb = kb(g)?;
    let mut train = read_labeled_pairs(&a.pairs)?;
    let aug = augment_dataset(&train, &kb, &augment, seed)?;
    eprintln!(
        "augmented {} pairs ({} positive, {} negative budget)",
        aug.pairs.len(),
        aug.diagnostics.positive_budget,
        aug.diagnostics.negative_budget
    );
    for (concept, n) in &aug.diagnostics.skipped {
        eprintln!("skipped {n} draws for concept {concept}: no rare entity");
    }
    if let Some(path) = &a.augmented_out {
        write_string(path, &labeled_pairs_to_tsv(&aug.pairs))?;
    }
    train.extend(aug.pairs);
    let mut model = train_classifier(&train, &kb, &hyper)?;
    if let Some(dev) = &a.dev {
        let dev = read_labeled_pairs(dev)?;
        for t in calibrate_model(&mut model, &dev, &kb, &a.targets) {
            eprintln!("precision target {t} is unattainable on the dev set");
        }
    }
    if g.verbose {
        for (i, l) in model.epoch_losses.iter().enumerate() {
            eprintln!("epoch {} loss {l:.6}", i + 1);
        }
    }
    model.save(&a.out)?;
    Ok(())
}

fn score(g: &Global, a: &ScoreArgs) -> Outcome {
    echo("score", g, a);
    let kb = kb(g)?;
    let model = ClassifierModel::load(&a.model)?;
    let contents = read_to_string(&a.pairs)?;
    let label = a.pairs.display().to_string();
    let two_columns = data_lines(&contents).all(|(_, l)| l.split('\t').count() == 2);
    let mut out = String::new();
    if two_columns {
        for (line, l) in data_lines(&contents) {
            let (q, k) = l.split_once('\t').ok_or_else(|| {
                Failure::Data(conceptmatch::Error::Parse {
                    file: label.clone(),
                    line,
                    message: "expected `query<TAB>keyword`".into(),
                })
            })?;
            let s = predict_score(&model, &tokenize(q), &tokenize(k), &kb);
            out.push_str(&format!("{q}\t{k}\t{s}\n"));
        }
    } else {
        let pairs = parse_labeled_pairs(&contents, &label)?;
        let mut scores = Vec::with_capacity(pairs.len());
        for p in &pairs {
            let s = predict_score(&model, &p.query, &p.keyword, &kb);
            scores.push(s);
            out.push_str(&format!(
                "{}\t{}\t{s}\t{}\n",
                p.query.join(" "),
                p.keyword.join(" "),
                p.label
            ));
        }
        let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
        let classes: BTreeSet<u8> = labels.iter().copied().collect();
        if classes.len() == 2 {
            eprintln!("auc {:.6}", auc(&scores, &labels)?);
        }
    }
    emit(a.output.as_deref(), &out)
}

fn evaluate(g: &Global, a: &EvaluateArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(path) => EvalConfig::read(path)?,
        None => EvalConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.world.seed = seed;
    }
    echo("evaluate", g, &cfg);
    let report = run_experiments(&cfg)?;
    report.write(&a.out)?;
    emit(None, &report.to_markdown())
}

fn gen_world(g: &Global, a: &GenWorldArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(path) => {
            let kv = KeyValues::read(path)?;
            kv.check_keys(&WorldConfig::KEYS)?;
            WorldConfig::from_key_values(&kv)?
        }
        None => WorldConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = a.$f { cfg.$f = v; })* };
    }
    set!(n_concepts, n_entities, n_templates, n_pairs, alias_rate, zipf_exponent);
    echo("gen-world", g, &cfg);
    let world = World::generate(&cfg)?;
    world.write_dir(&a.out)?;
    eprintln!(
        "{} templates, {} paraphrase pairs, {} keywords, {} test queries",
        world.templates.len(),
        world.paraphrases.len(),
        world.keywords.len(),
        world.test_queries.len()
    );
    Ok(())
}
