use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::KeywordRepository;
use crate::error::{Error, Result};
use crate::text::{self, tokenize, Tokens};

/// Partition of keywords into synonym clusters. Keywords never mentioned in
/// a pair are singletons.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymClusters {
    cluster_of: HashMap<Tokens, usize>,
    /// Sorted members; clusters ordered by their smallest member.
    clusters: Vec<Vec<Tokens>>,
}

#[derive(Debug, Clone, Default)]
pub struct ClusterBuild {
    pub clusters: SynonymClusters,
    /// Pairs with a side outside the repository.
    pub dropped: Vec<(Tokens, Tokens)>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

impl SynonymClusters {
    /// Transitive closure of `pairs` over `keywords`.
    pub fn from_pairs(keywords: &[Tokens], pairs: &[(Tokens, Tokens)]) -> Self {
        let index: HashMap<&Tokens, usize> = keywords.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut uf = UnionFind::new(keywords.len());
        for (a, b) in pairs {
            if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                uf.union(i, j);
            }
        }
        let mut groups: BTreeMap<usize, Vec<Tokens>> = BTreeMap::new();
        for (i, k) in keywords.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(k.clone());
        }
        let mut clusters: Vec<Vec<Tokens>> = groups
            .into_values()
            .filter(|g| g.len() > 1)
            .map(|mut g| {
                g.sort();
                g.dedup();
                g
            })
            .filter(|g| g.len() > 1)
            .collect();
        clusters.sort();
        let cluster_of = clusters
            .iter()
            .enumerate()
            .flat_map(|(c, members)| members.iter().map(move |m| (m.clone(), c)))
            .collect();
        Self { cluster_of, clusters }
    }

    /// Members of `keyword`'s cluster, sorted; `[keyword]` for singletons.
    pub fn members_of<'a>(&'a self, keyword: &'a Tokens) -> &'a [Tokens] {
        match self.cluster_of.get(keyword) {
            Some(&c) => &self.clusters[c],
            None => std::slice::from_ref(keyword),
        }
    }

    pub fn cluster_id(&self, keyword: &[String]) -> Option<usize> {
        self.cluster_of.get(keyword).copied()
    }

    pub fn same_cluster(&self, a: &[String], b: &[String]) -> bool {
        a == b || matches!((self.cluster_id(a), self.cluster_id(b)), (Some(x), Some(y)) if x == y)
    }

    /// Clusters with at least two members.
    pub fn clusters(&self) -> &[Vec<Tokens>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Pairs whose sides are both repository keywords are clustered; the rest are
/// reported as dropped.
pub fn build_clusters(pairs: &[(Tokens, Tokens)], repo: &KeywordRepository) -> ClusterBuild {
    let (kept, dropped): (Vec<_>, Vec<_>) = pairs
        .iter()
        .cloned()
        .partition(|(a, b)| repo.contains(a) && repo.contains(b));
    ClusterBuild {
        clusters: SynonymClusters::from_pairs(repo.keywords(), &kept),
        dropped,
    }
}

pub fn parse_keyword_pairs(contents: &str, file: &str) -> Result<Vec<(Tokens, Tokens)>> {
    text::data_lines(contents)
        .map(|(line, l)| {
            let (a, b) = l
                .split_once('\t')
                .filter(|(_, b)| !b.contains('\t'))
                .ok_or_else(|| Error::parse(file, line, "expected `keyword<TAB>keyword`"))?;
            let (a, b) = (tokenize(a), tokenize(b));
            if a.is_empty() || b.is_empty() {
                return Err(Error::parse(file, line, "empty keyword"));
            }
            Ok((a, b))
        })
        .collect()
}

pub fn read_keyword_pairs(path: &Path) -> Result<Vec<(Tokens, Tokens)>> {
    parse_keyword_pairs(&text::read_to_string(path)?, &text::file_label(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(s: &str) -> Tokens {
        tokenize(s)
    }

    #[test]
    fn transitive_closure() {
        let ks = vec![kw("a"), kw("b"), kw("c"), kw("d"), kw("e")];
        let c = SynonymClusters::from_pairs(&ks, &[(kw("a"), kw("b")), (kw("b"), kw("c"))]);
        assert_eq!(c.clusters(), &[vec![kw("a"), kw("b"), kw("c")]]);
        assert!(c.same_cluster(&kw("a"), &kw("c")));
        assert_eq!(c.members_of(&kw("d")), &[kw("d")]);
    }

    #[test]
    fn no_pairs_means_singletons() {
        let ks = vec![kw("a"), kw("b")];
        let c = SynonymClusters::from_pairs(&ks, &[]);
        assert!(c.is_empty());
    }

    #[test]
    fn pair_file_errors_have_lines() {
        let err = parse_keyword_pairs("a\tb\nbroken\n", "k2k").unwrap_err();
        assert_eq!(err.to_string(), "k2k:2: expected `keyword<TAB>keyword`");
    }
}
