//! Seeded synthetic world: a knowledge base with Zipf-distributed entity
//! usage, synonymous template groups, paraphrase pairs, a keyword inventory,
//! query logs, labeled discriminator pairs and the ground-truth synonymy
//! oracle.
//!
//! Template words and entity names are drawn from disjoint letter sets, so
//! tagging never confuses a template word with an entity surface.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::Serialize;

use crate::conceptualizer::{conceptualize, slot_token};
use crate::config::KeyValues;
use crate::corpus::{paraphrases_to_tsv, ParaphrasePair};
use crate::discriminator::{confusable, labeled_pairs_to_tsv, AugmentationConfig, LabeledPair, MatchType, Origin};
use crate::error::{Error, Result};
use crate::evaluation::bucket_index;
use crate::kb::{ConceptTaxonomy, Entity, EntityLexicon, KnowledgeBase};
use crate::text::{self, tokenize_pattern, Tokens};

pub const KB_DIR: &str = "kb";
pub const PARAPHRASES_FILE: &str = "paraphrases.tsv";
pub const KEYWORDS_FILE: &str = "keywords.txt";
pub const K2K_FILE: &str = "k2k-pairs.tsv";
pub const QUERIES_FILE: &str = "queries.txt";
pub const TEST_QUERIES_FILE: &str = "test-queries.txt";
pub const ORACLE_FILE: &str = "oracle.tsv";
pub const DISC_TRAIN_FILE: &str = "disc-train.tsv";
pub const DISC_DEV_FILE: &str = "disc-dev.tsv";
pub const DISC_TEST_GLOBAL_FILE: &str = "disc-test-global.tsv";
pub const DISC_TEST_LONGTAIL_FILE: &str = "disc-test-longtail.tsv";
pub const WORLD_CONF_FILE: &str = "world.conf";

const CONCEPT_NAMES: [&str; 6] = ["service", "product", "location", "brand", "course", "event"];
const HEADS: [[&str; 3]; 6] = [
    ["surgery", "therapy", "repair"],
    ["phone", "laptop", "camera"],
    ["city", "town", "county"],
    ["motors", "foods", "labs"],
    ["class", "lesson", "program"],
    ["festival", "concert", "fair"],
];
const ENTITY_CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const TEMPLATE_CONSONANTS: &[u8] = b"chjqwxy";
const VOWELS: &[u8] = b"aeiou";
const FUNCTION_WORDS: [&str; 4] = ["the", "of", "for", "in"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldConfig {
    pub n_concepts: usize,
    /// Entities per core concept.
    pub n_entities: usize,
    pub n_templates: usize,
    pub group_size: usize,
    pub alias_rate: f64,
    pub zipf_exponent: f64,
    pub n_pairs: usize,
    /// Paraphrase pairs whose target names a different entity.
    pub noise_rate: f64,
    pub n_keywords: usize,
    pub n_cluster_pairs: usize,
    pub n_queries: usize,
    /// Test queries per template and frequency bucket.
    pub test_per_template: usize,
    pub n_disc_train: usize,
    pub n_disc_dev: usize,
    pub n_disc_test: usize,
    /// Share of original negatives that differ in entity rather than meaning.
    pub disc_entity_negative_rate: f64,
    /// Share of discriminator labels flipped, as annotation noise.
    pub disc_label_noise: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_concepts: 4,
            n_entities: 150,
            n_templates: 48,
            group_size: 4,
            alias_rate: 0.3,
            zipf_exponent: 1.3,
            n_pairs: 16_000,
            noise_rate: 0.02,
            n_keywords: 3000,
            n_cluster_pairs: 400,
            n_queries: 2000,
            test_per_template: 3,
            n_disc_train: 4000,
            n_disc_dev: 1000,
            n_disc_test: 1000,
            disc_entity_negative_rate: 0.0,
            disc_label_noise: 0.0,
            seed: 7,
        }
    }
}

impl WorldConfig {
    pub const KEYS: [&'static str; 18] = [
        "n_concepts",
        "n_entities",
        "n_templates",
        "group_size",
        "alias_rate",
        "zipf_exponent",
        "n_pairs",
        "noise_rate",
        "n_keywords",
        "n_cluster_pairs",
        "n_queries",
        "test_per_template",
        "n_disc_train",
        "n_disc_dev",
        "n_disc_test",
        "disc_entity_negative_rate",
        "disc_label_noise",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_concepts", self.n_concepts),
            ("n_entities", self.n_entities),
            ("n_templates", self.n_templates),
            ("group_size", self.group_size),
            ("n_pairs", self.n_pairs),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_concepts > CONCEPT_NAMES.len() {
            return Err(Error::Config(format!(
                "n_concepts must be at most {}",
                CONCEPT_NAMES.len()
            )));
        }
        for (name, v) in [
            ("alias_rate", self.alias_rate),
            ("noise_rate", self.noise_rate),
            ("disc_entity_negative_rate", self.disc_entity_negative_rate),
            ("disc_label_noise", self.disc_label_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be within [0, 1]")));
            }
        }
        if self.zipf_exponent <= 0.0 {
            return Err(Error::Config("zipf_exponent must be positive".into()));
        }
        Ok(())
    }

    /// Overrides defaults with the keys present in `kv`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            n_concepts: kv.get_or("n_concepts", d.n_concepts)?,
            n_entities: kv.get_or("n_entities", d.n_entities)?,
            n_templates: kv.get_or("n_templates", d.n_templates)?,
            group_size: kv.get_or("group_size", d.group_size)?,
            alias_rate: kv.get_or("alias_rate", d.alias_rate)?,
            zipf_exponent: kv.get_or("zipf_exponent", d.zipf_exponent)?,
            n_pairs: kv.get_or("n_pairs", d.n_pairs)?,
            noise_rate: kv.get_or("noise_rate", d.noise_rate)?,
            n_keywords: kv.get_or("n_keywords", d.n_keywords)?,
            n_cluster_pairs: kv.get_or("n_cluster_pairs", d.n_cluster_pairs)?,
            n_queries: kv.get_or("n_queries", d.n_queries)?,
            test_per_template: kv.get_or("test_per_template", d.test_per_template)?,
            n_disc_train: kv.get_or("n_disc_train", d.n_disc_train)?,
            n_disc_dev: kv.get_or("n_disc_dev", d.n_disc_dev)?,
            n_disc_test: kv.get_or("n_disc_test", d.n_disc_test)?,
            disc_entity_negative_rate: kv.get_or("disc_entity_negative_rate", d.disc_entity_negative_rate)?,
            disc_label_noise: kv.get_or("disc_label_noise", d.disc_label_noise)?,
            seed: kv.get_or("seed", d.seed)?,
        })
    }

    pub fn to_conf(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key}={}", v[key]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub group: usize,
    pub concept: String,
    /// Rendered pattern tokens with one slot.
    pub pattern: Tokens,
}

/// Template pattern -> synonymy group. Two sentences are synonymous iff
/// their patterns belong to one group and they name the same entity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymyOracle {
    group_of: HashMap<Tokens, usize>,
}

impl SynonymyOracle {
    pub fn new(templates: &[Template]) -> Self {
        Self {
            group_of: templates.iter().map(|t| (t.pattern.clone(), t.group)).collect(),
        }
    }

    pub fn group_of(&self, pattern: &[String]) -> Option<usize> {
        self.group_of.get(pattern).copied()
    }

    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&Tokens, usize)> = self.group_of.iter().map(|(p, g)| (p, *g)).collect();
        rows.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        rows.iter().map(|(p, g)| format!("{}\t{g}\n", p.join(" "))).collect()
    }

    pub fn parse(contents: &str, file: &str) -> Result<Self> {
        let mut group_of = HashMap::new();
        for (line, l) in text::data_lines(contents) {
            let (p, g) = l
                .split_once('\t')
                .ok_or_else(|| Error::parse(file, line, "expected `pattern<TAB>group`"))?;
            let g: usize = g
                .trim()
                .parse()
                .map_err(|_| Error::parse(file, line, format!("invalid group `{g}`")))?;
            group_of.insert(tokenize_pattern(p), g);
        }
        Ok(Self { group_of })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&text::read_to_string(path)?, &text::file_label(path))
    }

    pub fn is_synonymous(&self, a: &[String], b: &[String], kb: &KnowledgeBase) -> bool {
        let pa = conceptualize(a, kb);
        let pb = conceptualize(b, kb);
        let (Some(ga), Some(gb)) = (self.group_of(&pa.tokens()), self.group_of(&pb.tokens())) else {
            return false;
        };
        let mut ea: Vec<&str> = pa.slot_values.iter().map(|v| v.entity_id.as_str()).collect();
        let mut eb: Vec<&str> = pb.slot_values.iter().map(|v| v.entity_id.as_str()).collect();
        ea.sort_unstable();
        eb.sort_unstable();
        ga == gb && ea == eb
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    pub kb: KnowledgeBase,
    pub templates: Vec<Template>,
    pub paraphrases: Vec<ParaphrasePair>,
    pub keywords: Vec<Tokens>,
    pub k2k_pairs: Vec<(Tokens, Tokens)>,
    pub queries: Vec<Tokens>,
    pub test_queries: Vec<Tokens>,
    pub disc_train: Vec<LabeledPair>,
    pub disc_dev: Vec<LabeledPair>,
    pub disc_test_global: Vec<LabeledPair>,
    pub disc_test_longtail: Vec<LabeledPair>,
}

struct Gen<'a> {
    cfg: &'a WorldConfig,
    rng: ChaCha8Rng,
    /// Per concept, entity ids in popularity order.
    entities: Vec<Vec<Entity>>,
    concepts: Vec<String>,
    templates: Vec<Template>,
    /// Group -> template indices.
    groups: Vec<Vec<usize>>,
    /// Concept index -> group indices.
    concept_groups: Vec<Vec<usize>>,
    zipf: Zipf<f64>,
}

fn word(rng: &mut ChaCha8Rng, consonants: &[u8], syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*consonants.choose(rng).expect("non-empty") as char);
        w.push(*VOWELS.choose(rng).expect("non-empty") as char);
    }
    if rng.random_bool(0.5) {
        w.push(*consonants.choose(rng).expect("non-empty") as char);
    }
    w
}

/// One-letter substitution, keeping the letter class.
fn variant(rng: &mut ChaCha8Rng, base: &str) -> String {
    let mut chars: Vec<char> = base.chars().collect();
    let i = rng.random_range(0..chars.len());
    let pool = if VOWELS.contains(&(chars[i] as u8)) {
        VOWELS
    } else {
        ENTITY_CONSONANTS
    };
    loop {
        let c = *pool.choose(rng).expect("non-empty") as char;
        if c != chars[i] {
            chars[i] = c;
            break;
        }
    }
    chars.into_iter().collect()
}

impl Gen<'_> {
    fn concept_of_template(&self, t: usize) -> usize {
        self.concepts
            .iter()
            .position(|c| *c == self.templates[t].concept)
            .expect("template concept exists")
    }

    fn zipf_entity(&mut self) -> usize {
        let k = self.zipf.sample(&mut self.rng) as usize;
        k.clamp(1, self.cfg.n_entities) - 1
    }

    fn surface(&mut self, e: &Entity, alias_p: f64) -> Tokens {
        if !e.aliases.is_empty() && self.rng.random_bool(alias_p) {
            e.aliases.choose(&mut self.rng).expect("non-empty").clone()
        } else {
            e.canonical.clone()
        }
    }

    fn fill(&self, t: usize, surface: &[String]) -> Tokens {
        let slot = slot_token(&self.templates[t].concept);
        self.templates[t]
            .pattern
            .iter()
            .flat_map(|tok| {
                if *tok == slot {
                    surface.to_vec()
                } else {
                    vec![tok.clone()]
                }
            })
            .collect()
    }

    fn other_in_group(&mut self, t: usize) -> usize {
        let group = &self.groups[self.templates[t].group];
        let others: Vec<usize> = group.iter().copied().filter(|&o| o != t).collect();
        others.choose(&mut self.rng).copied().unwrap_or(t)
    }

    fn other_group_template(&mut self, t: usize) -> Option<usize> {
        let c = self.concept_of_template(t);
        let g = self.templates[t].group;
        let candidates: Vec<usize> = self.concept_groups[c]
            .iter()
            .filter(|&&o| o != g)
            .flat_map(|&o| self.groups[o].iter().copied())
            .collect();
        candidates.choose(&mut self.rng).copied()
    }

    fn random_template(&mut self) -> usize {
        self.rng.random_range(0..self.templates.len())
    }

    fn build_templates(&mut self) {
        let n_groups = self.cfg.n_templates.div_ceil(self.cfg.group_size);
        let mut used: HashSet<String> = HashSet::new();
        let mut seen_patterns: HashSet<Tokens> = HashSet::new();
        let mut remaining = self.cfg.n_templates;
        // one word pool per concept: synonymy is not readable from word overlap
        let pools: Vec<Vec<String>> = (0..self.concepts.len())
            .map(|_| {
                (0..6)
                    .map(|_| loop {
                        let syl = self.rng.random_range(1..=2);
                        let w = word(&mut self.rng, TEMPLATE_CONSONANTS, syl);
                        if used.insert(w.clone()) {
                            break w;
                        }
                    })
                    .collect()
            })
            .collect();
        for g in 0..n_groups {
            let concept = g % self.concepts.len();
            let pool = &pools[concept];
            let size = remaining.min(self.cfg.group_size);
            remaining -= size;
            let mut members = Vec::new();
            let mut tries = 0;
            while members.len() < size && tries < 10_000 {
                tries += 1;
                let n_lit = *[1usize, 2, 2, 3, 3].choose(&mut self.rng).expect("non-empty");
                let mut lits: Vec<String> = pool.choose_multiple(&mut self.rng, n_lit).cloned().collect();
                if n_lit > 1 && self.rng.random_bool(0.3) {
                    let i = self.rng.random_range(0..n_lit);
                    lits[i] = FUNCTION_WORDS.choose(&mut self.rng).expect("non-empty").to_string();
                }
                let pos = self.rng.random_range(0..=n_lit);
                lits.insert(pos, slot_token(&self.concepts[concept]));
                if seen_patterns.insert(lits.clone()) {
                    members.push(self.templates.len());
                    self.templates.push(Template {
                        group: g,
                        concept: self.concepts[concept].clone(),
                        pattern: lits,
                    });
                }
            }
            self.concept_groups[concept].push(g);
            self.groups.push(members);
        }
    }
}

impl World {
    pub fn generate(cfg: &WorldConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let concepts: Vec<String> = CONCEPT_NAMES[..cfg.n_concepts].iter().map(|s| s.to_string()).collect();

        let mut tax = String::new();
        for (ci, c) in concepts.iter().enumerate() {
            let _ = writeln!(tax, "{c}\t-\t1");
            for h in HEADS[ci] {
                let _ = writeln!(tax, "{c}_{h}\t{c}\t0");
            }
        }
        let taxonomy = ConceptTaxonomy::parse(&tax, "world taxonomy")?;

        let mut names: HashSet<String> = HashSet::new();
        let mut entities: Vec<Vec<Entity>> = Vec::new();
        for (ci, c) in concepts.iter().enumerate() {
            let mut list: Vec<Entity> = Vec::new();
            let mut bases: Vec<String> = Vec::new();
            while list.len() < cfg.n_entities {
                let pseudo = if !bases.is_empty() && rng.random_bool(0.3) {
                    let b = bases.choose(&mut rng).expect("non-empty").clone();
                    variant(&mut rng, &b)
                } else {
                    let syl = rng.random_range(2..=3);
                    word(&mut rng, ENTITY_CONSONANTS, syl)
                };
                if !names.insert(pseudo.clone()) {
                    continue;
                }
                bases.push(pseudo.clone());
                let head = *HEADS[ci].choose(&mut rng).expect("non-empty");
                let aliases = if rng.random_bool(cfg.alias_rate) {
                    vec![vec![pseudo.clone()]]
                } else {
                    Vec::new()
                };
                list.push(Entity {
                    id: format!("{c}_{:03}", list.len()),
                    canonical: vec![pseudo, head.to_string()],
                    refined_concept: format!("{c}_{head}"),
                    aliases,
                });
            }
            entities.push(list);
        }
        let lexicon = EntityLexicon::new(entities.iter().flatten().cloned().collect())?;
        let kb = KnowledgeBase::new(taxonomy, lexicon)?;

        let zipf =
            Zipf::new(cfg.n_entities as f64, cfg.zipf_exponent).map_err(|e| Error::Config(format!("zipf: {e}")))?;
        let mut g = Gen {
            cfg,
            rng,
            entities,
            concepts: concepts.clone(),
            templates: Vec::new(),
            groups: Vec::new(),
            concept_groups: vec![Vec::new(); concepts.len()],
            zipf,
        };
        g.build_templates();

        // paraphrase pairs; source-side entity frequency drives bucketing
        let mut paraphrases = Vec::with_capacity(cfg.n_pairs);
        let mut freq: Vec<Vec<usize>> = vec![vec![0; cfg.n_entities]; concepts.len()];
        for _ in 0..cfg.n_pairs {
            let t1 = g.random_template();
            let c = g.concept_of_template(t1);
            let e = g.zipf_entity();
            let t2 = g.other_in_group(t1);
            let ent = g.entities[c][e].clone();
            let src = g.surface(&ent, 0.3);
            let tgt_ent = if g.rng.random_bool(cfg.noise_rate) && cfg.n_entities > 1 {
                let mut o = g.rng.random_range(0..cfg.n_entities - 1);
                if o >= e {
                    o += 1;
                }
                g.entities[c][o].clone()
            } else {
                ent.clone()
            };
            let tgt = g.surface(&tgt_ent, 0.3);
            freq[c][e] += 1;
            paraphrases.push(ParaphrasePair {
                source: g.fill(t1, &src),
                target: g.fill(t2, &tgt),
            });
        }

        // keyword inventory: every template at least once
        let mut keywords: Vec<Tokens> = Vec::new();
        let mut kw_seen: HashSet<Tokens> = HashSet::new();
        let mut kw_meta: Vec<(usize, usize, usize)> = Vec::new();
        for i in 0..cfg.n_keywords.max(g.templates.len()) {
            let t = if i < g.templates.len() { i } else { g.random_template() };
            let c = g.concept_of_template(t);
            let e = g.zipf_entity();
            let ent = g.entities[c][e].clone();
            let s = g.surface(&ent, 0.3);
            let kw = g.fill(t, &s);
            if kw_seen.insert(kw.clone()) {
                keywords.push(kw);
                kw_meta.push((g.templates[t].group, c, e));
            }
        }
        let mut by_meaning: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, m) in kw_meta.iter().enumerate() {
            by_meaning.entry(*m).or_default().push(i);
        }
        let multi: Vec<&Vec<usize>> = by_meaning.values().filter(|v| v.len() > 1).collect();
        let mut k2k_pairs = Vec::new();
        if !multi.is_empty() {
            for _ in 0..cfg.n_cluster_pairs {
                let members = multi.choose(&mut g.rng).expect("non-empty");
                let pick: Vec<&usize> = members.choose_multiple(&mut g.rng, 2).collect();
                k2k_pairs.push((keywords[*pick[0]].clone(), keywords[*pick[1]].clone()));
            }
        }

        let mut queries = Vec::with_capacity(cfg.n_queries);
        for _ in 0..cfg.n_queries {
            let t = g.random_template();
            let c = g.concept_of_template(t);
            let e = g.zipf_entity();
            let ent = g.entities[c][e].clone();
            let s = g.surface(&ent, 0.3);
            queries.push(g.fill(t, &s));
        }

        // stratified test queries: the same template multiset in every bucket
        let mut test_queries = Vec::new();
        for t in 0..g.templates.len() {
            let c = g.concept_of_template(t);
            let per_bucket: Vec<Vec<usize>> = (1..=4)
                .map(|b| {
                    (0..cfg.n_entities)
                        .filter(|&e| bucket_index(freq[c][e]) == Some(b))
                        .collect()
                })
                .collect();
            if per_bucket.iter().any(Vec::is_empty) {
                continue;
            }
            for bucket in &per_bucket {
                for _ in 0..cfg.test_per_template {
                    let e = *bucket.choose(&mut g.rng).expect("non-empty");
                    let canonical = g.entities[c][e].canonical.clone();
                    test_queries.push(g.fill(t, &canonical));
                }
            }
        }

        let disc_train = disc_pairs(&mut g, cfg.n_disc_train, None);
        let disc_dev = disc_pairs(&mut g, cfg.n_disc_dev, None);
        let disc_test_global = disc_pairs(&mut g, cfg.n_disc_test, None);
        let mut disc_freq: HashMap<String, usize> = HashMap::new();
        for p in &disc_train {
            for side in [&p.query, &p.keyword] {
                for m in crate::conceptualizer::tag_sentence(side, &kb) {
                    *disc_freq.entry(m.entity_id).or_default() += 1;
                }
            }
        }
        // rare in the discriminator training data; the least frequent tenth
        // stands in when a concept has no rare entity
        let threshold = AugmentationConfig::default().rare_frequency_threshold;
        let rare: Vec<Vec<usize>> = (0..concepts.len())
            .map(|c| {
                let f = |e: usize| disc_freq.get(&g.entities[c][e].id).copied().unwrap_or(0);
                let pool: Vec<usize> = (0..cfg.n_entities).filter(|&e| f(e) <= threshold).collect();
                if !pool.is_empty() {
                    return pool;
                }
                let mut by_freq: Vec<usize> = (0..cfg.n_entities).collect();
                by_freq.sort_by_key(|&e| (f(e), e));
                by_freq.truncate(cfg.n_entities.div_ceil(10));
                by_freq.sort_unstable();
                by_freq
            })
            .collect();
        let disc_test_longtail = disc_pairs(&mut g, cfg.n_disc_test, Some(&rare));

        Ok(World {
            config: *cfg,
            kb,
            templates: g.templates,
            paraphrases,
            keywords,
            k2k_pairs,
            queries,
            test_queries,
            disc_train,
            disc_dev,
            disc_test_global,
            disc_test_longtail,
        })
    }

    pub fn oracle(&self) -> SynonymyOracle {
        SynonymyOracle::new(&self.templates)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        self.kb.write_dir(&dir.join(KB_DIR))?;
        let lines = |v: &[Tokens]| -> String { v.iter().map(|k| text::join(k) + "\n").collect() };
        text::write_string(&dir.join(PARAPHRASES_FILE), &paraphrases_to_tsv(&self.paraphrases))?;
        text::write_string(&dir.join(KEYWORDS_FILE), &lines(&self.keywords))?;
        let k2k: String = self
            .k2k_pairs
            .iter()
            .map(|(a, b)| format!("{}\t{}\n", text::join(a), text::join(b)))
            .collect();
        text::write_string(&dir.join(K2K_FILE), &k2k)?;
        text::write_string(&dir.join(QUERIES_FILE), &lines(&self.queries))?;
        text::write_string(&dir.join(TEST_QUERIES_FILE), &lines(&self.test_queries))?;
        text::write_string(&dir.join(ORACLE_FILE), &self.oracle().to_tsv())?;
        text::write_string(&dir.join(DISC_TRAIN_FILE), &labeled_pairs_to_tsv(&self.disc_train))?;
        text::write_string(&dir.join(DISC_DEV_FILE), &labeled_pairs_to_tsv(&self.disc_dev))?;
        text::write_string(
            &dir.join(DISC_TEST_GLOBAL_FILE),
            &labeled_pairs_to_tsv(&self.disc_test_global),
        )?;
        text::write_string(
            &dir.join(DISC_TEST_LONGTAIL_FILE),
            &labeled_pairs_to_tsv(&self.disc_test_longtail),
        )?;
        text::write_string(&dir.join(WORLD_CONF_FILE), &self.config.to_conf())
    }
}

fn match_type(rng: &mut ChaCha8Rng) -> MatchType {
    match rng.random_range(0..4) {
        0 | 1 => MatchType::Exact,
        2 => MatchType::Phrase,
        _ => MatchType::Broad,
    }
}

/// Half positive (same group, same entity). Without `rare`, negatives change
/// the meaning (another group of the same concept) and a small share swaps
/// the entity instead. With `rare`, entities come from the per-concept rare
/// pools and half of the negatives swap in a confusable entity.
fn disc_pairs(g: &mut Gen<'_>, n: usize, rare: Option<&Vec<Vec<usize>>>) -> Vec<LabeledPair> {
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 50 * n + 100 {
        attempts += 1;
        let t1 = g.random_template();
        let c = g.concept_of_template(t1);
        let e = match rare {
            Some(pools) => match pools[c].choose(&mut g.rng) {
                Some(&e) => e,
                None => continue,
            },
            None => g.zipf_entity(),
        };
        let ent = g.entities[c][e].clone();
        let mt = match_type(&mut g.rng);
        let positive = g.rng.random_bool(0.5);
        let (t2, kw_ent) = if positive {
            let t2 = if g.rng.random_bool(1.0 / g.cfg.group_size as f64) {
                t1
            } else {
                g.other_in_group(t1)
            };
            (t2, ent.clone())
        } else {
            let swap_rate = if rare.is_some() {
                0.5
            } else {
                g.cfg.disc_entity_negative_rate
            };
            let other_group = g.other_group_template(t1);
            let swap = g.rng.random_bool(swap_rate);
            if let (false, Some(t2)) = (swap, other_group) {
                (t2, ent.clone())
            } else {
                let base = ent.canonical.join(" ");
                let cfg = AugmentationConfig::default();
                let pool: Vec<usize> = match rare {
                    Some(pools) => pools[c].clone(),
                    None => (0..g.cfg.n_entities).collect(),
                };
                let others: Vec<usize> = pool.into_iter().filter(|&o| o != e).collect();
                let close: Vec<usize> = others
                    .iter()
                    .copied()
                    .filter(|&o| confusable(&base, &g.entities[c][o].canonical.join(" "), &cfg))
                    .collect();
                let pick = if rare.is_some() && !close.is_empty() {
                    close.choose(&mut g.rng).copied()
                } else {
                    others.choose(&mut g.rng).copied()
                };
                let Some(o) = pick else { continue };
                let t2 = g.other_in_group(t1);
                (t2, g.entities[c][o].clone())
            }
        };
        let q = g.surface(&ent, 0.5);
        let k = g.surface(&kw_ent, 0.5);
        let flip = g.rng.random_bool(g.cfg.disc_label_noise);
        out.push(LabeledPair {
            query: g.fill(t1, &q),
            keyword: g.fill(t2, &k),
            label: (positive != flip) as u8,
            match_type: mt,
            origin: Origin::Original,
        });
    }
    out
}
