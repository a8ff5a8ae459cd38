//! Synonymy discrimination for query/keyword pairs: features, a logistic
//! classifier, entity-replacement augmentation and precision-targeted
//! thresholds.

mod augment;
mod calibrate;
mod classifier;
mod features;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use augment::{
    augment_dataset, char_overlap, confusable, entity_frequencies, AugmentDiagnostics, Augmentation, AugmentationConfig,
};
pub use calibrate::{calibrate_threshold, operating_point, OperatingPoint};
pub use classifier::{loss_and_gradient, precision_key, sigmoid, train_on_features, ClassifierModel, TrainHyper};
pub use features::{
    aligned_slots, extract_features, feature_names, features_from_patterns, render_with, FeatureVector, DENSE_DIM,
    DENSE_NAMES, FEATURE_DIM, HASH_DIM,
};

use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::text::{self, tokenize, Tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchType {
    Exact,
    Phrase,
    Broad,
}

impl MatchType {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchType::Exact => "exact",
            MatchType::Phrase => "phrase",
            MatchType::Broad => "broad",
        }
    }
}

impl FromStr for MatchType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(MatchType::Exact),
            "phrase" => Ok(MatchType::Phrase),
            "broad" => Ok(MatchType::Broad),
            other => Err(format!("unknown match type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub query: Tokens,
    pub keyword: Tokens,
    /// 1 means synonymous.
    pub label: u8,
    pub match_type: MatchType,
    pub origin: Origin,
}

/// `query<TAB>keyword<TAB>label<TAB>match_type`, with an optional fifth
/// `origin` column.
pub fn parse_labeled_pairs(contents: &str, file: &str) -> Result<Vec<LabeledPair>> {
    text::data_lines(contents)
        .map(|(line, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if !(4..=5).contains(&f.len()) {
                return Err(Error::parse(
                    file,
                    line,
                    format!("expected 4 or 5 fields, found {}", f.len()),
                ));
            }
            let (query, keyword) = (tokenize(f[0]), tokenize(f[1]));
            if query.is_empty() || keyword.is_empty() {
                return Err(Error::parse(file, line, "empty query or keyword"));
            }
            let label = match f[2].trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(
                        file,
                        line,
                        format!("label must be 0 or 1, found `{other}`"),
                    ))
                }
            };
            let match_type = f[3].trim().parse().map_err(|e: String| Error::parse(file, line, e))?;
            let origin = match f.get(4).map(|s| s.trim()) {
                None | Some("original") => Origin::Original,
                Some("augmented") => Origin::Augmented,
                Some(other) => return Err(Error::parse(file, line, format!("unknown origin `{other}`"))),
            };
            Ok(LabeledPair {
                query,
                keyword,
                label,
                match_type,
                origin,
            })
        })
        .collect()
}

pub fn read_labeled_pairs(path: &Path) -> Result<Vec<LabeledPair>> {
    parse_labeled_pairs(&text::read_to_string(path)?, &text::file_label(path))
}

pub fn labeled_pairs_to_tsv(pairs: &[LabeledPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}",
            text::join(&p.query),
            text::join(&p.keyword),
            p.label,
            p.match_type.as_str()
        );
        if p.origin == Origin::Augmented {
            out.push_str("\taugmented");
        }
        out.push('\n');
    }
    out
}

pub fn featurize(pairs: &[LabeledPair], kb: &KnowledgeBase) -> Vec<(FeatureVector, u8)> {
    pairs
        .par_iter()
        .map(|p| (extract_features(&p.query, &p.keyword, kb), p.label))
        .collect()
}

pub fn train_classifier(pairs: &[LabeledPair], kb: &KnowledgeBase, hyper: &TrainHyper) -> Result<ClassifierModel> {
    train_on_features(&featurize(pairs, kb), hyper)
}

pub fn predict_score(model: &ClassifierModel, query: &[String], keyword: &[String], kb: &KnowledgeBase) -> f64 {
    model.score(&extract_features(query, keyword, kb))
}

pub fn score_pairs(model: &ClassifierModel, pairs: &[LabeledPair], kb: &KnowledgeBase) -> Vec<f64> {
    pairs
        .par_iter()
        .map(|p| predict_score(model, &p.query, &p.keyword, kb))
        .collect()
}

/// Stores a dev-set threshold per attainable precision target and returns
/// the targets that could not be met.
pub fn calibrate_model(
    model: &mut ClassifierModel,
    dev: &[LabeledPair],
    kb: &KnowledgeBase,
    targets: &[f64],
) -> Vec<f64> {
    let scores = score_pairs(model, dev, kb);
    let labels: Vec<u8> = dev.iter().map(|p| p.label).collect();
    let mut unattainable = Vec::new();
    for &t in targets {
        match calibrate_threshold(&scores, &labels, t) {
            Some(th) => {
                model.thresholds.insert(precision_key(t), th);
            }
            None => unattainable.push(t),
        }
    }
    unattainable
}
