//! Maximum-likelihood and universal decoding of code-tree codebooks.
//!
//! Trees are compared by likelihood first and by their symbol vectors
//! (lexicographic, the canonical order) on ties; duplicate trees resolve to
//! the smallest message index. With one channel the universal decoder and
//! the ML decoder therefore make identical decisions.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::{causal_channel_log_prob, digits, ChannelTable, InitialState};
use crate::channel::{CompoundFamily, FeedbackMap, FscSpec};
use crate::codetree::{Codebook, ConcatTree};
use crate::error::{Error, Result};

fn feedback_history(y: &[usize], feedback: &FeedbackMap) -> Result<Vec<usize>> {
    if y.iter().any(|&v| v >= feedback.y_card()) {
        return Err(Error::AlphabetMismatch("output symbol outside Y".into()));
    }
    Ok(y[..y.len().saturating_sub(1)].iter().map(|&v| feedback.apply(v)).collect())
}

/// `ln Σ_{s0} prior(s0) P(y^n || x^n(tree, z^{n-1}), s0)`.
pub fn tree_log_likelihood(
    fsc: &FscSpec,
    tree: &ConcatTree,
    y: &[usize],
    feedback: &FeedbackMap,
    s0: &InitialState,
) -> Result<f64> {
    if tree.depth() != y.len() {
        return Err(Error::AlphabetMismatch(format!("tree depth {} vs output length {}", tree.depth(), y.len())));
    }
    if tree.z_card() != feedback.z_card() || tree.x_card() != fsc.n_inputs() || feedback.y_card() != fsc.n_outputs() {
        return Err(Error::AlphabetMismatch("tree, feedback and channel disagree on alphabets".into()));
    }
    let x = tree.path(&feedback_history(y, feedback)?)?;
    causal_channel_log_prob(fsc, &x, y, s0)
}

pub fn tree_likelihood(
    fsc: &FscSpec,
    tree: &ConcatTree,
    y: &[usize],
    feedback: &FeedbackMap,
    s0: &InitialState,
) -> Result<f64> {
    Ok(tree_log_likelihood(fsc, tree, y, feedback, s0)?.exp())
}

/// Higher likelihood first, then the canonical tree order.
fn rank_order(a: (f64, &ConcatTree), b: (f64, &ConcatTree)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// The maximum-likelihood message under one channel.
pub fn ml_decode(cb: &Codebook, y: &[usize], fsc: &FscSpec, feedback: &FeedbackMap, s0: &InitialState) -> Result<usize> {
    let ll = cb
        .trees
        .iter()
        .map(|t| tree_log_likelihood(fsc, t, y, feedback, s0))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for w in 1..cb.trees.len() {
        if rank_order((ll[w], &cb.trees[w]), (ll[best], &cb.trees[best])) == Ordering::Less {
            best = w;
        }
    }
    Ok(best)
}

/// A bijection from a tree set onto ranks `1..=|B|` for one received sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    /// Tree indices from rank 1 downwards.
    order: Vec<usize>,
    /// 1-based rank of each tree index.
    rank: Vec<usize>,
}

impl Ranking {
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut rank = vec![0; order.len()];
        for (r, &t) in order.iter().enumerate() {
            if t >= order.len() || rank[t] != 0 {
                return Err(Error::InvalidArgument("ranking is not a bijection".into()));
            }
            rank[t] = r + 1;
        }
        Ok(Self { order, rank })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rank_of(&self, tree: usize) -> usize {
        self.rank[tree]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Ranks `trees` by likelihood of `y` under `fsc`.
pub fn build_ranking(
    fsc: &FscSpec,
    trees: &[ConcatTree],
    y: &[usize],
    feedback: &FeedbackMap,
    s0: &InitialState,
) -> Result<Ranking> {
    if trees.is_empty() {
        return Err(Error::InvalidArgument("ranking needs a non-empty tree set".into()));
    }
    let ll = trees.iter().map(|t| tree_log_likelihood(fsc, t, y, feedback, s0)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..trees.len()).collect();
    order.sort_by(|&a, &b| rank_order((ll[a], &trees[a]), (ll[b], &trees[b])));
    Ranking::from_order(order)
}

/// Round-robin merge: rank 1 goes to the first choice of ranking 1, rank 2
/// to the first choice of ranking 2, and so on through the second choices;
/// trees already placed are skipped.
pub fn merge_rankings(rankings: &[Ranking]) -> Result<Ranking> {
    let first = rankings.first().ok_or_else(|| Error::InvalidArgument("nothing to merge".into()))?;
    let size = first.len();
    if rankings.iter().any(|r| r.len() != size) {
        return Err(Error::InvalidArgument("rankings cover different tree sets".into()));
    }
    let mut placed = vec![false; size];
    let mut order = Vec::with_capacity(size);
    'rounds: for j in 0..size {
        for r in rankings {
            let t = r.order[j];
            if !placed[t] {
                placed[t] = true;
                order.push(t);
                if order.len() == size {
                    break 'rounds;
                }
            }
        }
    }
    Ranking::from_order(order)
}

/// Number of `(tree, k)` pairs breaking `M_u ≤ min((j-1)K + k, K j)` where `j = M_k`.
pub fn merge_bound_violations(rankings: &[Ranking], merged: &Ranking) -> usize {
    let kk = rankings.len();
    let mut bad = 0;
    for (k, r) in rankings.iter().enumerate() {
        for t in 0..merged.len() {
            let j = r.rank_of(t);
            let bound = ((j - 1) * kk + k + 1).min(kk * j);
            if merged.rank_of(t) > bound {
                bad += 1;
            }
        }
    }
    bad
}

/// Distinct trees of a codebook in canonical order, and the smallest
/// message index carrying each.
pub fn distinct_trees(cb: &Codebook) -> (Vec<ConcatTree>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..cb.trees.len()).collect();
    idx.sort_by(|&a, &b| cb.trees[a].cmp(&cb.trees[b]).then(a.cmp(&b)));
    let mut trees = Vec::new();
    let mut owner = Vec::new();
    for w in idx {
        if trees.last() != Some(&cb.trees[w]) {
            trees.push(cb.trees[w].clone());
            owner.push(w);
        }
    }
    (trees, owner)
}

/// Merges the ML rankings of every member of `family` and returns the
/// message whose tree is ranked first.
pub fn universal_decode(
    cb: &Codebook,
    y: &[usize],
    family: &CompoundFamily,
    feedback: &FeedbackMap,
    s0: &InitialState,
) -> Result<usize> {
    let (trees, owner) = distinct_trees(cb);
    let rankings = family
        .members()
        .par_iter()
        .map(|fsc| build_ranking(fsc, &trees, y, feedback, s0))
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_rankings(&rankings)?;
    Ok(owner[merged.order()[0]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityEntry {
    pub member: String,
    pub representative: String,
    /// Pairs `(s0, x^n, y^n)` breaking the upper inequality.
    pub upper_violations: usize,
    /// Pairs breaking the reverse inequality.
    pub lower_violations: usize,
    /// Largest `|log2 P_θ - log2 P_θ*| / n` over pairs where either side is above the threshold.
    pub max_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub n: usize,
    pub eps: f64,
    pub mu: f64,
    pub entries: Vec<SeparabilityEntry>,
    pub total_violations: usize,
}

fn pair_violations(a: &ChannelTable, b: &ChannelTable, n: usize, eps: f64, mu: f64, ny: usize) -> (usize, usize, f64) {
    let slack = (n as f64 * eps).exp2();
    let thr = (-(n as f64) * (mu + (ny as f64).log2())).exp2();
    let (mut up, mut low, mut worst) = (0, 0, 0.0f64);
    for (&p, &r) in a.probs().iter().zip(b.probs()) {
        if p > thr && p > slack * r {
            up += 1;
        }
        if r > thr && p < r / slack {
            low += 1;
        }
        if p > thr || r > thr {
            let ratio = if p > 0.0 && r > 0.0 { (p.log2() - r.log2()).abs() / n as f64 } else { f64::INFINITY };
            worst = worst.max(ratio);
        }
    }
    (up, low, worst)
}

/// Checks both strong-separability inequalities exhaustively on every
/// `(s0, x^n, y^n)`. Each member is matched with the representative that
/// has the fewest violations (earliest on ties).
pub fn separability_check(
    family: &CompoundFamily,
    representatives: &CompoundFamily,
    n: usize,
    eps: f64,
    mu: f64,
) -> Result<SeparabilityReport> {
    let shape = family.shape();
    if !shape.same_shape(representatives.shape()) {
        return Err(Error::AlphabetMismatch("representatives must share the family's shape".into()));
    }
    if !(eps >= 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidArgument("need eps >= 0 and mu > 0".into()));
    }
    let tables = |f: &FscSpec| -> Result<Vec<ChannelTable>> {
        (0..f.n_states()).map(|s| ChannelTable::new(f, n, &InitialState::Fixed(s))).collect()
    };
    let rep_tables = representatives.members().iter().map(tables).collect::<Result<Vec<_>>>()?;
    let ny = shape.n_outputs();
    let mut entries = Vec::with_capacity(family.len());
    for (member, label) in family.members().iter().zip(family.labels()) {
        let mine = tables(member)?;
        let mut best: Option<(usize, usize, usize, f64)> = None;
        for (k, theirs) in rep_tables.iter().enumerate() {
            let (mut up, mut low, mut worst) = (0, 0, 0.0f64);
            for (a, b) in mine.iter().zip(theirs) {
                let (u, l, w) = pair_violations(a, b, n, eps, mu, ny);
                up += u;
                low += l;
                worst = worst.max(w);
            }
            if best.map_or(true, |(_, bu, bl, _)| up + low < bu + bl) {
                best = Some((k, up, low, worst));
            }
        }
        let (k, up, low, worst) = best.expect("representatives are non-empty");
        entries.push(SeparabilityEntry {
            member: label.clone(),
            representative: representatives.labels()[k].clone(),
            upper_violations: up,
            lower_violations: low,
            max_log_ratio: worst,
        });
    }
    let total_violations = entries.iter().map(|e| e.upper_violations + e.lower_violations).sum();
    Ok(SeparabilityReport { n, eps, mu, entries, total_violations })
}

/// All output sequences of length `n`, big-endian.
pub fn all_outputs(n: usize, y_card: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..y_card.pow(n as u32)).map(move |i| digits(i, y_card, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::CausalConditioning;
    use crate::channel::{bsc, make_memoryless};
    use crate::codetree::CodeTree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree1(symbols: &[usize]) -> ConcatTree {
        let blocks = symbols.iter().map(|&s| CodeTree::new(1, 2, 2, vec![s]).unwrap()).collect();
        ConcatTree::new(blocks).unwrap()
    }

    #[test]
    fn noiseless_tree_likelihood() {
        let id = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // echo the previous output: root 0, then copy the feedback
        let t = ConcatTree::single(CodeTree::new(2, 2, 2, vec![0, 0, 1]).unwrap());
        let fb = FeedbackMap::identity(2);
        assert_eq!(tree_likelihood(&id, &t, &[0, 0], &fb, &InitialState::Fixed(0)).unwrap(), 1.0);
        assert_eq!(tree_likelihood(&id, &t, &[1, 1], &fb, &InitialState::Fixed(0)).unwrap(), 0.0);
    }

    #[test]
    fn ml_ties_and_unique_explanation() {
        let id = make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let fb = FeedbackMap::identity(2);
        let s0 = InitialState::Fixed(0);
        let cb = Codebook::new(vec![tree1(&[0, 0]), tree1(&[1, 0]), tree1(&[1, 1])]).unwrap();
        assert_eq!(ml_decode(&cb, &[1, 0], &id, &fb, &s0).unwrap(), 1);
        let dup = Codebook::new(vec![tree1(&[1, 1]), tree1(&[0, 1]), tree1(&[0, 1])]).unwrap();
        assert_eq!(ml_decode(&dup, &[0, 1], &id, &fb, &s0).unwrap(), 1);
        assert_eq!(universal_decode(&dup, &[0, 1], &CompoundFamily::single(id, "id"), &fb, &s0).unwrap(), 1);
    }

    #[test]
    fn reversed_rankings_merge() {
        let a = Ranking::from_order(vec![0, 1, 2]).unwrap();
        let b = Ranking::from_order(vec![2, 1, 0]).unwrap();
        let m = merge_rankings(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m.order(), &[0, 2, 1]);
        assert_eq!(merge_bound_violations(&[a.clone(), b], &m), 0);
        assert_eq!(merge_rankings(&[a.clone()]).unwrap(), a);
        assert!(Ranking::from_order(vec![0, 0]).is_err());
    }

    #[test]
    fn k1_universal_equals_ml() {
        let ch = bsc(0.2).unwrap();
        let fb = FeedbackMap::identity(2);
        let s0 = InitialState::Fixed(0);
        let q = CausalConditioning::uniform(2, 2, 2);
        let cb = Codebook::generate(&q, 2, 6, 3).unwrap();
        let fam = CompoundFamily::single(ch.clone(), "b");
        for y in all_outputs(4, 2) {
            assert_eq!(
                ml_decode(&cb, &y, &ch, &fb, &s0).unwrap(),
                universal_decode(&cb, &y, &fam, &fb, &s0).unwrap()
            );
        }
    }

    #[test]
    fn random_merge_bounds() {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let rs: Vec<Ranking> = (0..3)
                .map(|_| {
                    let mut o: Vec<usize> = (0..8).collect();
                    o.shuffle(&mut rng);
                    Ranking::from_order(o).unwrap()
                })
                .collect();
            let m = merge_rankings(&rs).unwrap();
            assert_eq!(merge_bound_violations(&rs, &m), 0);
        }
    }

    #[test]
    fn separability_examples() {
        let fam = CompoundFamily::single(bsc(0.3).unwrap(), "target");
        let r = separability_check(&fam, &fam, 2, 0.0, 1.0).unwrap();
        assert_eq!(r.total_violations, 0);
        let near = CompoundFamily::single(bsc(0.3 + 1e-4).unwrap(), "near");
        let mu = 1.0 + std::f64::consts::LN_2;
        assert_eq!(separability_check(&fam, &near, 2, 0.01, mu).unwrap().total_violations, 0);
        let far = CompoundFamily::single(bsc(0.45).unwrap(), "far");
        assert!(separability_check(&fam, &far, 2, 0.001, mu).unwrap().total_violations > 0);
    }
}
