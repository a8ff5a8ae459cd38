use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::kb::ConceptTaxonomy;
use crate::text::{self, tokenize, valid_identifier, Tokens};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub canonical: Tokens,
    pub refined_concept: String,
    /// Never contains the canonical surface or duplicates.
    pub aliases: Vec<Tokens>,
}

impl Entity {
    /// Canonical surface, then aliases.
    pub fn surfaces(&self) -> impl Iterator<Item = &Tokens> {
        std::iter::once(&self.canonical).chain(self.aliases.iter())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EntityLexicon {
    entities: Vec<Entity>,
    by_id: HashMap<String, usize>,
}

impl PartialEq for EntityLexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
    }
}

impl EntityLexicon {
    pub fn new(entities: Vec<Entity>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateEntity(e.id.clone()));
            }
        }
        Ok(Self { entities, by_id })
    }

    /// Parses `entity_id <TAB> canonical <TAB> refined_concept <TAB> alias|alias`.
    /// The alias column may be empty or omitted.
    pub fn parse(contents: &str, file: &str, taxonomy: &ConceptTaxonomy) -> Result<Self> {
        let mut entities = Vec::new();
        let mut seen = HashMap::new();
        for (line_no, line) in text::data_lines(contents) {
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::parse(
                    file,
                    line_no,
                    format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let id = fields[0].trim();
            if !valid_identifier(id) {
                return Err(Error::parse(file, line_no, format!("invalid entity id `{id}`")));
            }
            if seen.insert(id.to_string(), line_no).is_some() {
                return Err(Error::parse(file, line_no, format!("duplicate entity id `{id}`")));
            }
            let canonical = tokenize(fields[1]);
            if canonical.is_empty() {
                return Err(Error::parse(file, line_no, "empty canonical surface"));
            }
            let refined = fields[2].trim();
            if !taxonomy.contains(refined) {
                return Err(Error::parse(
                    file,
                    line_no,
                    format!("dangling concept reference `{refined}`"),
                ));
            }
            let mut aliases: Vec<Tokens> = Vec::new();
            let mut dedup = BTreeSet::from([canonical.clone()]);
            if let Some(field) = fields.get(3) {
                for alias in field.split('|').map(tokenize) {
                    if !alias.is_empty() && dedup.insert(alias.clone()) {
                        aliases.push(alias);
                    }
                }
            }
            entities.push(Entity {
                id: id.to_string(),
                canonical,
                refined_concept: refined.to_string(),
                aliases,
            });
        }
        Self::new(entities)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# entity_id\tcanonical_surface\trefined_concept\taliases\n");
        for e in &self.entities {
            let aliases: Vec<String> = e.aliases.iter().map(|a| text::join(a)).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.id,
                text::join(&e.canonical),
                e.refined_concept,
                aliases.join("|")
            ));
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.by_id.get(id).map(|&i| &self.entities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taxonomy() -> ConceptTaxonomy {
        ConceptTaxonomy::parse("food\t-\t1\n", "t").unwrap()
    }

    #[test]
    fn alias_equal_to_canonical_is_dropped() {
        let lex = EntityLexicon::parse("e1\tGala Apple\tfood\tgala apple|gala||gala\n", "e", &taxonomy()).unwrap();
        let e = lex.get("e1").unwrap();
        assert_eq!(e.canonical, vec!["gala", "apple"]);
        assert_eq!(e.aliases, vec![vec!["gala".to_string()]]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = EntityLexicon::parse("e1\ta\tfood\t\ne1\tb\tfood\t\n", "e", &taxonomy()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn dangling_concept_rejected() {
        let err = EntityLexicon::parse("e1\ta\tcars\t\n", "e", &taxonomy()).unwrap_err();
        assert!(err.to_string().contains("cars"));
    }

    #[test]
    fn alias_column_optional() {
        let lex = EntityLexicon::parse("e1\tmelon\tfood\n", "e", &taxonomy()).unwrap();
        assert!(lex.get("e1").unwrap().aliases.is_empty());
    }
}
