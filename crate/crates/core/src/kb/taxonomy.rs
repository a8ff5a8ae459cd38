use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::text::{self, valid_identifier};

/// Concept DAG with core-concept flags.
///
/// Each concept rolls up to the core ancestor reached by the fewest hypernym
/// edges (the concept itself counts, at distance zero). Ties at equal distance
/// go to the lexicographically smallest concept id. Roll-ups are precomputed
/// at construction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConceptTaxonomy {
    concepts: BTreeSet<String>,
    parents: BTreeMap<String, BTreeSet<String>>,
    core: BTreeSet<String>,
    rollup: BTreeMap<String, Option<String>>,
}

impl ConceptTaxonomy {
    /// Builds a taxonomy from `(child, parent)` edges. Every concept mentioned
    /// must be listed in `concepts`.
    pub fn new(
        concepts: BTreeSet<String>,
        edges: impl IntoIterator<Item = (String, String)>,
        core: BTreeSet<String>,
    ) -> Result<Self> {
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (child, parent) in edges {
            for c in [&child, &parent] {
                if !concepts.contains(c) {
                    return Err(Error::UnknownConcept(c.clone()));
                }
            }
            parents.entry(child).or_default().insert(parent);
        }
        if let Some(c) = core.iter().find(|c| !concepts.contains(*c)) {
            return Err(Error::UnknownConcept(c.clone()));
        }
        let mut taxonomy = Self {
            concepts,
            parents,
            core,
            rollup: BTreeMap::new(),
        };
        taxonomy.check_acyclic()?;
        taxonomy.rollup = taxonomy
            .concepts
            .iter()
            .map(|c| (c.clone(), taxonomy.nearest_core(c)))
            .collect();
        Ok(taxonomy)
    }

    /// Parses `concept <TAB> parent-or-dash <TAB> core{0,1}` lines. A concept
    /// may appear on several lines to declare several parents.
    pub fn parse(contents: &str, file: &str) -> Result<Self> {
        let mut concepts = BTreeSet::new();
        let mut core_flags: BTreeMap<String, bool> = BTreeMap::new();
        let mut edges = Vec::new();
        for (line_no, line) in text::data_lines(contents) {
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    file,
                    line_no,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let concept = fields[0];
            if !valid_identifier(concept) {
                return Err(Error::parse(file, line_no, format!("invalid concept id `{concept}`")));
            }
            let core = match fields[2] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        file,
                        line_no,
                        format!("core flag must be 0 or 1, got `{other}`"),
                    ))
                }
            };
            if let Some(prev) = core_flags.insert(concept.to_string(), core) {
                if prev != core {
                    return Err(Error::parse(
                        file,
                        line_no,
                        format!("conflicting core flags for `{concept}`"),
                    ));
                }
            }
            concepts.insert(concept.to_string());
            if fields[1] != "-" {
                edges.push((line_no, concept.to_string(), fields[1].to_string()));
            }
        }
        for (line_no, _, parent) in &edges {
            if !concepts.contains(parent) {
                return Err(Error::parse(
                    file,
                    *line_no,
                    format!("dangling concept reference `{parent}`"),
                ));
            }
        }
        let core = core_flags
            .into_iter()
            .filter_map(|(c, is_core)| is_core.then_some(c))
            .collect();
        Self::new(
            concepts,
            edges.into_iter().map(|(_, child, parent)| (child, parent)),
            core,
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# concept_id\tparent_concept_id\tcore\n");
        for concept in &self.concepts {
            let flag = if self.core.contains(concept) { 1 } else { 0 };
            match self.parents.get(concept) {
                Some(ps) if !ps.is_empty() => {
                    for p in ps {
                        out.push_str(&format!("{concept}\t{p}\t{flag}\n"));
                    }
                }
                _ => out.push_str(&format!("{concept}\t-\t{flag}\n")),
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.contains(concept)
    }

    pub fn is_core(&self, concept: &str) -> bool {
        self.core.contains(concept)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(String::as_str)
    }

    pub fn core_concepts(&self) -> impl Iterator<Item = &str> {
        self.core.iter().map(String::as_str)
    }

    pub fn parents_of(&self, concept: &str) -> impl Iterator<Item = &str> {
        self.parents.get(concept).into_iter().flatten().map(String::as_str)
    }

    pub fn coarse_concept_of(&self, concept: &str) -> Result<Option<&str>> {
        self.rollup
            .get(concept)
            .map(|c| c.as_deref())
            .ok_or_else(|| Error::UnknownConcept(concept.to_string()))
    }

    fn nearest_core(&self, concept: &str) -> Option<String> {
        let mut frontier: BTreeSet<&str> = BTreeSet::from([concept]);
        let mut seen: BTreeSet<&str> = frontier.clone();
        while !frontier.is_empty() {
            // BTreeSet iteration is ordered, so the first hit is the smallest id.
            if let Some(hit) = frontier.iter().find(|c| self.core.contains(**c)) {
                return Some(hit.to_string());
            }
            let mut next = BTreeSet::new();
            for c in &frontier {
                for p in self.parents_of(c) {
                    if seen.insert(p) {
                        next.insert(p);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Visiting,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
        for start in &self.concepts {
            if marks.contains_key(start.as_str()) {
                continue;
            }
            // Iterative DFS: (concept, next parent index).
            let mut stack: Vec<(&str, Vec<&str>, usize)> = vec![(start.as_str(), self.parents_of(start).collect(), 0)];
            marks.insert(start, Mark::Visiting);
            while let Some((node, ps, idx)) = stack.last_mut() {
                if *idx < ps.len() {
                    let p = ps[*idx];
                    *idx += 1;
                    match marks.get(p) {
                        Some(Mark::Visiting) => return Err(Error::TaxonomyCycle(p.to_string())),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(p, Mark::Visiting);
                            stack.push((p, self.parents_of(p).collect(), 0));
                        }
                    }
                } else {
                    marks.insert(node, Mark::Done);
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}
