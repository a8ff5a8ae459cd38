//! Token-level prefix tree over keyword patterns.

use std::collections::{BTreeSet, HashMap};

use crate::text::Tokens;

#[derive(Debug, Clone, Default)]
struct Node {
    children: HashMap<String, usize>,
    terminal: bool,
}

#[derive(Debug, Clone)]
pub struct PatternTrie {
    nodes: Vec<Node>,
    len: usize,
}

impl Default for PatternTrie {
    fn default() -> Self {
        Self::new()
    }
}

impl PatternTrie {
    pub const ROOT: usize = 0;

    pub fn new() -> Self {
        Self {
            nodes: vec![Node::default()],
            len: 0,
        }
    }

    pub fn from_patterns<I, T>(patterns: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[String]>,
    {
        let mut trie = Self::new();
        for p in patterns {
            trie.insert(p.as_ref());
        }
        trie
    }

    /// Returns false if the pattern was already present.
    pub fn insert(&mut self, pattern: &[String]) -> bool {
        let mut node = Self::ROOT;
        for tok in pattern {
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
        let fresh = !self.nodes[node].terminal;
        self.nodes[node].terminal = true;
        self.len += fresh as usize;
        fresh
    }

    pub fn child(&self, node: usize, token: &str) -> Option<usize> {
        self.nodes[node].children.get(token).copied()
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        self.nodes[node].terminal
    }

    /// Node reached by walking `tokens` from `node`.
    pub fn walk<'a>(&self, mut node: usize, tokens: impl IntoIterator<Item = &'a str>) -> Option<usize> {
        for t in tokens {
            node = self.child(node, t)?;
        }
        Some(node)
    }

    pub fn contains(&self, pattern: &[String]) -> bool {
        self.walk(Self::ROOT, pattern.iter().map(String::as_str))
            .is_some_and(|n| self.is_terminal(n))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All member patterns, sorted.
    pub fn enumerate(&self) -> BTreeSet<Tokens> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(usize, Tokens)> = vec![(Self::ROOT, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            if self.nodes[node].terminal {
                out.insert(path.clone());
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
