//! Lexical translation model (IBM Model 1 with a NULL source word) trained
//! by expectation-maximization, Viterbi alignment, and alignment
//! symmetrization.

use std::collections::{BTreeSet, HashMap};

use super::vocab::TokenId;

const NULL: TokenId = TokenId::MAX;

/// Two probabilities within this relative distance are treated as tied.
const TIE_EPS: f64 = 1e-12;

/// `t(f | e)` for generating the second side of each pair from the first.
#[derive(Debug, Clone)]
pub struct LexicalModel {
    probs: HashMap<(TokenId, TokenId), f64>,
    uniform: f64,
}

impl LexicalModel {
    pub fn prob(&self, e: Option<TokenId>, f: TokenId) -> f64 {
        self.probs.get(&(e.unwrap_or(NULL), f)).copied().unwrap_or(self.uniform)
    }

    /// `iterations == 0` leaves every probability uniform.
    pub fn train(pairs: &[(&[TokenId], &[TokenId])], iterations: usize) -> Self {
        let f_vocab: BTreeSet<TokenId> = pairs.iter().flat_map(|(_, f)| f.iter().copied()).collect();
        let uniform = 1.0 / f_vocab.len().max(1) as f64;
        let mut model = Self {
            probs: HashMap::new(),
            uniform,
        };
        for _ in 0..iterations {
            let mut counts: HashMap<(TokenId, TokenId), f64> = HashMap::new();
            let mut totals: HashMap<TokenId, f64> = HashMap::new();
            for (e_sent, f_sent) in pairs {
                for &f in *f_sent {
                    let denom: f64 = std::iter::once(NULL)
                        .chain(e_sent.iter().copied())
                        .map(|e| model.probs.get(&(e, f)).copied().unwrap_or(uniform))
                        .sum();
                    for e in std::iter::once(NULL).chain(e_sent.iter().copied()) {
                        let c = model.probs.get(&(e, f)).copied().unwrap_or(uniform) / denom;
                        *counts.entry((e, f)).or_default() += c;
                        *totals.entry(e).or_default() += c;
                    }
                }
            }
            model.probs = counts.into_iter().map(|((e, f), c)| ((e, f), c / totals[&e])).collect();
        }
        model
    }

    /// Best source position for every target word, `None` for NULL. Ties go
    /// to the position nearest the diagonal, then to the leftmost.
    pub fn viterbi(&self, e_sent: &[TokenId], f_sent: &[TokenId]) -> Vec<Option<usize>> {
        let l = e_sent.len() as f64;
        let m = f_sent.len() as f64;
        f_sent
            .iter()
            .enumerate()
            .map(|(j, &f)| {
                let mut best: Option<usize> = None;
                let mut best_p = self.prob(None, f);
                let mut best_dist = f64::INFINITY;
                let diag = (j as f64 + 0.5) / m;
                for (i, &e) in e_sent.iter().enumerate() {
                    let p = self.prob(Some(e), f);
                    let dist = ((i as f64 + 0.5) / l - diag).abs();
                    let tied = (p - best_p).abs() <= TIE_EPS * p.max(best_p);
                    if (!tied && p > best_p) || (tied && (best.is_none() || dist < best_dist)) {
                        best = Some(i);
                        best_p = p;
                        best_dist = dist;
                    }
                }
                best
            })
            .collect()
    }
}

/// Intersection of both directional alignments, grown through
/// (diagonal) neighbours from the union while either word is unaligned.
/// Points are `(source index, target index)`.
pub fn symmetrize(
    src_len: usize,
    tgt_len: usize,
    src_to_tgt: &[Option<usize>],
    tgt_to_src: &[Option<usize>],
) -> BTreeSet<(usize, usize)> {
    let forward: BTreeSet<(usize, usize)> = tgt_to_src
        .iter()
        .enumerate()
        .filter_map(|(t, s)| s.map(|s| (s, t)))
        .collect();
    let reverse: BTreeSet<(usize, usize)> = src_to_tgt
        .iter()
        .enumerate()
        .filter_map(|(s, t)| t.map(|t| (s, t)))
        .collect();
    let union: BTreeSet<(usize, usize)> = forward.union(&reverse).copied().collect();
    let mut alignment: BTreeSet<(usize, usize)> = forward.intersection(&reverse).copied().collect();
    let mut src_aligned = vec![false; src_len];
    let mut tgt_aligned = vec![false; tgt_len];
    for &(s, t) in &alignment {
        src_aligned[s] = true;
        tgt_aligned[t] = true;
    }
    const NEIGHBOURS: [(isize, isize); 8] = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];
    loop {
        let mut added = false;
        for (s, t) in alignment.clone() {
            for (ds, dt) in NEIGHBOURS {
                let (ns, nt) = (s as isize + ds, t as isize + dt);
                if ns < 0 || nt < 0 || ns as usize >= src_len || nt as usize >= tgt_len {
                    continue;
                }
                let p = (ns as usize, nt as usize);
                if alignment.contains(&p) || !union.contains(&p) {
                    continue;
                }
                if !src_aligned[p.0] || !tgt_aligned[p.1] {
                    alignment.insert(p);
                    src_aligned[p.0] = true;
                    tgt_aligned[p.1] = true;
                    added = true;
                }
            }
        }
        if !added {
            return alignment;
        }
    }
}
