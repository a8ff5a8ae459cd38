//! Concept-pattern synonymous keyword retrieval.
//!
//! Sentences are abstracted into patterns by tagging knowledge-base entities
//! and replacing core-concept mentions with slots. A phrase-based translation
//! model rewrites query patterns into keyword patterns under a trie of valid
//! keyword patterns; the results are instantiated with the query's entities
//! and aliases, joined against the keyword inventory and widened by synonym
//! clusters. A feature-based classifier trained with entity-replacement
//! augmentation scores the final query/keyword pairs.

pub mod conceptualizer;
pub mod config;
pub mod corpus;
pub mod discriminator;
pub mod error;
pub mod evaluation;
pub mod kb;
pub mod matcher;
pub mod repository;
pub mod text;
pub mod translation;
pub mod trie;
pub mod world;

pub use conceptualizer::{conceptualize, instantiate, tag_sentence, Mention, Pattern, Segment, SlotValue};
pub use corpus::{build_parallel_patterns, strict_alignment_filter, ParaphrasePair, PatternPair};
pub use error::{Error, Result};
pub use kb::KnowledgeBase;
pub use text::{tokenize, Tokens};
pub use translation::{train_model, Candidate, DecodeConfig, DecodeResult, TrainConfig, TranslationModel};
pub use trie::PatternTrie;
