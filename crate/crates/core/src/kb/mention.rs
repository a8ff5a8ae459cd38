use std::collections::HashMap;

use crate::kb::EntityLexicon;
use crate::text::Tokens;

#[derive(Debug, Clone, Default)]
struct Node {
    children: HashMap<String, usize>,
    /// Entity ids whose surface ends here, sorted ascending.
    entities: Vec<String>,
}

/// Token-level trie over every canonical surface and alias in the lexicon.
#[derive(Debug, Clone)]
pub struct MentionIndex {
    nodes: Vec<Node>,
    surfaces: usize,
}

impl MentionIndex {
    pub fn build(lexicon: &EntityLexicon) -> Self {
        let mut index = Self {
            nodes: vec![Node::default()],
            surfaces: 0,
        };
        for entity in lexicon.iter() {
            for surface in entity.surfaces() {
                index.insert(surface, &entity.id);
            }
        }
        index
    }

    fn insert(&mut self, surface: &[String], entity_id: &str) {
        let mut node = 0;
        for tok in surface {
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(tok.clone(), next);
                    next
                }
            };
        }
        let ids = &mut self.nodes[node].entities;
        if ids.is_empty() {
            self.surfaces += 1;
        }
        if let Err(pos) = ids.binary_search_by(|id| id.as_str().cmp(entity_id)) {
            ids.insert(pos, entity_id.to_string());
        }
    }

    /// Longest surface starting at `start`: returns the exclusive end and the
    /// entity ids (ascending) sharing that surface.
    pub fn longest_match(&self, tokens: &[String], start: usize) -> Option<(usize, &[String])> {
        let mut node = 0;
        let mut best = None;
        for (offset, tok) in tokens[start..].iter().enumerate() {
            match self.nodes[node].children.get(tok) {
                Some(&next) => node = next,
                None => break,
            }
            if !self.nodes[node].entities.is_empty() {
                best = Some((start + offset + 1, self.nodes[node].entities.as_slice()));
            }
        }
        best
    }

    /// Entity ids for an exact surface.
    pub fn lookup(&self, surface: &[String]) -> &[String] {
        let mut node = 0;
        for tok in surface {
            match self.nodes[node].children.get(tok) {
                Some(&next) => node = next,
                None => return &[],
            }
        }
        &self.nodes[node].entities
    }

    /// Number of distinct indexed surfaces.
    pub fn surface_count(&self) -> usize {
        self.surfaces
    }

    /// Every indexed surface with its entity ids, in no particular order.
    pub fn entries(&self) -> Vec<(Tokens, Vec<String>)> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Tokens)> = vec![(0, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            if !self.nodes[node].entities.is_empty() {
                out.push((path.clone(), self.nodes[node].entities.clone()));
            }
            for (tok, &child) in &self.nodes[node].children {
                let mut p = path.clone();
                p.push(tok.clone());
                stack.push((child, p));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::kb::ConceptTaxonomy;
    use crate::text::tokenize;

    fn lexicon() -> EntityLexicon {
        let t = ConceptTaxonomy::parse("location\t-\t1\n", "t").unwrap();
        EntityLexicon::parse(
            "ny\tnew york\tlocation\tnyc\nnyc_city\tnew york city\tlocation\nb_york\tyork\tlocation\na_york\tyork\tlocation\n",
            "e",
            &t,
        )
        .unwrap()
    }

    #[test]
    fn longest_match_wins() {
        let idx = MentionIndex::build(&lexicon());
        let toks = tokenize("flights to new york city");
        assert_eq!(idx.longest_match(&toks, 2), Some((5, &["nyc_city".to_string()][..])));
        assert_eq!(idx.longest_match(&toks, 0), None);
    }

    #[test]
    fn shared_surface_ids_sorted() {
        let idx = MentionIndex::build(&lexicon());
        assert_eq!(idx.lookup(&tokenize("york")), ["a_york", "b_york"]);
    }

    #[test]
    fn index_contents_equal_lexicon_surfaces() {
        let lex = lexicon();
        let idx = MentionIndex::build(&lex);
        let from_index: BTreeSet<(Tokens, String)> = idx
            .entries()
            .into_iter()
            .flat_map(|(s, ids)| ids.into_iter().map(move |id| (s.clone(), id)))
            .collect();
        let from_lexicon: BTreeSet<(Tokens, String)> = lex
            .iter()
            .flat_map(|e| e.surfaces().map(move |s| (s.clone(), e.id.clone())))
            .collect();
        assert_eq!(from_index, from_lexicon);
        for e in lex.iter() {
            for s in e.surfaces() {
                let (end, _) = idx.longest_match(s, 0).unwrap();
                assert_eq!(end, s.len());
            }
        }
    }
}
