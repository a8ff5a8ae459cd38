//! Knowledge base: concept taxonomy, entity lexicon and the surface index
//! used for gazetteer tagging.

mod lexicon;
mod mention;
mod taxonomy;

use std::path::Path;

pub use lexicon::{Entity, EntityLexicon};
pub use mention::MentionIndex;
pub use taxonomy::ConceptTaxonomy;

use crate::error::{Error, Result};
use crate::text::{self, Tokens};

pub const TAXONOMY_FILE: &str = "taxonomy.tsv";
pub const ENTITIES_FILE: &str = "entities.tsv";

/// Immutable after load; share it behind `&` or `Arc` freely.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub taxonomy: ConceptTaxonomy,
    pub lexicon: EntityLexicon,
    pub mentions: MentionIndex,
}

impl KnowledgeBase {
    pub fn new(taxonomy: ConceptTaxonomy, lexicon: EntityLexicon) -> Result<Self> {
        for entity in lexicon.iter() {
            if !taxonomy.contains(&entity.refined_concept) {
                return Err(Error::UnknownConcept(entity.refined_concept.clone()));
            }
        }
        let mentions = MentionIndex::build(&lexicon);
        Ok(Self {
            taxonomy,
            lexicon,
            mentions,
        })
    }

    pub fn load(taxonomy_file: &Path, entities_file: &Path) -> Result<Self> {
        let taxonomy = ConceptTaxonomy::parse(&text::read_to_string(taxonomy_file)?, &text::file_label(taxonomy_file))?;
        let lexicon = EntityLexicon::parse(
            &text::read_to_string(entities_file)?,
            &text::file_label(entities_file),
            &taxonomy,
        )?;
        Self::new(taxonomy, lexicon)
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        Self::load(&dir.join(TAXONOMY_FILE), &dir.join(ENTITIES_FILE))
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        text::write_string(&dir.join(TAXONOMY_FILE), &self.taxonomy.to_tsv())?;
        text::write_string(&dir.join(ENTITIES_FILE), &self.lexicon.to_tsv())
    }

    pub fn coarse_concept_of(&self, concept: &str) -> Result<Option<&str>> {
        self.taxonomy.coarse_concept_of(concept)
    }

    /// Canonical surface first, then aliases in lexicon order.
    pub fn aliases_of(&self, entity_id: &str) -> Result<Vec<Tokens>> {
        let entity = self
            .lexicon
            .get(entity_id)
            .ok_or_else(|| Error::UnknownEntity(entity_id.to_string()))?;
        Ok(entity.surfaces().cloned().collect())
    }

    /// Core concept an entity's refined concept rolls up to.
    pub fn core_concept_of_entity(&self, entity_id: &str) -> Option<&str> {
        let entity = self.lexicon.get(entity_id)?;
        self.taxonomy.coarse_concept_of(&entity.refined_concept).ok().flatten()
    }
}
