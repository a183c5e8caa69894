//! Code-trees: one input symbol per (time, feedback history) node.
//!
//! A depth-`n` tree over feedback alphabet `Z` holds `D(n) = Σ_{i=1}^n |Z|^{i-1}`
//! symbols. Level `i` starts at offset `D(i-1)` and its nodes are ordered by
//! the big-endian index of `z^{i-1}`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::CausalConditioning;
use crate::error::{checked_pow, Error, Result};

/// Largest `|X|^{D(m)}` accepted by type operations.
pub const TYPE_KEY_CAP: u128 = 1 << 12;

/// Largest codebook accepted by [`Codebook::generate`].
pub const MESSAGE_CAP: u64 = 1 << 20;

/// `D(n) = Σ_{i=1}^n |Z|^{i-1}`.
pub fn tree_size(n: usize, z_card: usize) -> Result<usize> {
    if n == 0 || z_card == 0 {
        return Err(Error::InvalidArgument("tree depth and feedback alphabet must be positive".into()));
    }
    if z_card == 1 {
        return Ok(n);
    }
    let zn = checked_pow(z_card, n, "code-tree nodes", u64::MAX as u128)?;
    Ok((zn - 1) / (z_card - 1))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CodeTree {
    depth: usize,
    x_card: usize,
    z_card: usize,
    symbols: Vec<usize>,
}

impl CodeTree {
    pub fn new(depth: usize, x_card: usize, z_card: usize, symbols: Vec<usize>) -> Result<Self> {
        let d = tree_size(depth, z_card)?;
        if symbols.len() != d {
            return Err(Error::InvalidArgument(format!("depth-{depth} tree needs {d} symbols, got {}", symbols.len())));
        }
        if symbols.iter().any(|&s| s >= x_card) {
            return Err(Error::AlphabetMismatch("tree symbol outside the input alphabet".into()));
        }
        Ok(Self { depth, x_card, z_card, symbols })
    }

    /// The tree with mixed-radix canonical key `key`.
    pub fn from_key(depth: usize, x_card: usize, z_card: usize, mut key: u64) -> Result<Self> {
        let d = tree_size(depth, z_card)?;
        let mut symbols = vec![0; d];
        for s in symbols.iter_mut().rev() {
            *s = (key % x_card as u64) as usize;
            key /= x_card as u64;
        }
        Self::new(depth, x_card, z_card, symbols)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn z_card(&self) -> usize {
        self.z_card
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    fn level_offset(&self, level: usize) -> usize {
        if level == 1 {
            0
        } else {
            tree_size(level - 1, self.z_card).expect("depth already validated")
        }
    }

    /// Symbol at `level` (1-based) for feedback prefix index `z_idx`.
    pub fn node(&self, level: usize, z_idx: usize) -> usize {
        self.symbols[self.level_offset(level) + z_idx]
    }

    /// The input sequence sent when the feedback is `z_hist`.
    pub fn path(&self, z_hist: &[usize]) -> Result<Vec<usize>> {
        if z_hist.len() + 1 != self.depth {
            return Err(Error::InvalidArgument(format!(
                "depth-{} tree needs {} feedback symbols",
                self.depth,
                self.depth - 1
            )));
        }
        if z_hist.iter().any(|&z| z >= self.z_card) {
            return Err(Error::AlphabetMismatch("feedback symbol outside Z".into()));
        }
        let mut out = Vec::with_capacity(self.depth);
        let mut zi = 0;
        for level in 1..=self.depth {
            out.push(self.node(level, zi));
            if level < self.depth {
                zi = zi * self.z_card + z_hist[level - 1];
            }
        }
        Ok(out)
    }

    /// Big-endian mixed-radix encoding of the symbol vector.
    pub fn canonical_key(&self) -> Result<u64> {
        checked_pow(self.x_card, self.symbols.len(), "code-tree key space", u64::MAX as u128)?;
        Ok(self.symbols.iter().fold(0u64, |acc, &s| acc * self.x_card as u64 + s as u64))
    }
}

/// Draws a tree node-by-node from `q`, each node conditioned on the path
/// leading to it and its feedback history.
pub fn sample_codetree<R: Rng + ?Sized>(q: &CausalConditioning, rng: &mut R) -> CodeTree {
    let (n, xc, zc) = (q.horizon(), q.x_card(), q.z_card());
    let d = tree_size(n, zc).expect("policy horizon is positive");
    let mut symbols = vec![0; d];
    // x-path index leading to each node of the previous level
    let mut prev_paths = vec![0usize];
    let mut offset = 0;
    for level in 1..=n {
        let width = zc.pow(level as u32 - 1);
        let mut paths = Vec::with_capacity(width);
        for zi in 0..width {
            let xi = prev_paths[zi / zc];
            let row = q.row(level, xi, zi);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            for (a, &p) in row.iter().enumerate() {
                acc += p;
                if p > 0.0 && u < acc {
                    pick = a;
                    break;
                }
            }
            symbols[offset + zi] = pick;
            paths.push(xi * xc + pick);
        }
        offset += width;
        prev_paths = paths;
    }
    CodeTree { depth: n, x_card: xc, z_card: zc, symbols }
}

/// Probability that [`sample_codetree`] returns `tree`.
pub fn tree_probability(q: &CausalConditioning, tree: &CodeTree) -> Result<f64> {
    if q.horizon() != tree.depth || q.x_card() != tree.x_card || q.z_card() != tree.z_card {
        return Err(Error::InvalidPolicy("policy and tree disagree in shape".into()));
    }
    let zc = tree.z_card;
    let mut p = 1.0;
    let mut prev_paths = vec![0usize];
    for level in 1..=tree.depth {
        let width = zc.pow(level as u32 - 1);
        let mut paths = Vec::with_capacity(width);
        for zi in 0..width {
            let xi = prev_paths[zi / zc];
            let a = tree.node(level, zi);
            p *= q.row(level, xi, zi)[a];
            paths.push(xi * tree.x_card + a);
        }
        prev_paths = paths;
    }
    Ok(p)
}

/// `N` depth-`m` trees used back to back; the feedback at each block
/// boundary is not used.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConcatTree {
    blocks: Vec<CodeTree>,
}

impl ConcatTree {
    pub fn new(blocks: Vec<CodeTree>) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::InvalidArgument("need at least one block".into()))?;
        if blocks.iter().any(|b| b.depth != first.depth || b.x_card != first.x_card || b.z_card != first.z_card) {
            return Err(Error::InvalidArgument("blocks must share depth and alphabets".into()));
        }
        Ok(Self { blocks })
    }

    pub fn single(tree: CodeTree) -> Self {
        Self { blocks: vec![tree] }
    }

    pub fn blocks(&self) -> &[CodeTree] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_depth(&self) -> usize {
        self.blocks[0].depth
    }

    pub fn depth(&self) -> usize {
        self.n_blocks() * self.block_depth()
    }

    pub fn x_card(&self) -> usize {
        self.blocks[0].x_card
    }

    pub fn z_card(&self) -> usize {
        self.blocks[0].z_card
    }

    pub fn path(&self, z_hist: &[usize]) -> Result<Vec<usize>> {
        let m = self.block_depth();
        if z_hist.len() + 1 != self.depth() {
            return Err(Error::InvalidArgument(format!("concatenated tree needs {} feedback symbols", self.depth() - 1)));
        }
        let mut out = Vec::with_capacity(self.depth());
        for (b, block) in self.blocks.iter().enumerate() {
            out.extend(block.path(&z_hist[b * m..b * m + m - 1])?);
        }
        Ok(out)
    }

    /// All block symbols in order.
    pub fn symbols(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.symbols.iter().copied()).collect()
    }
}

/// Counts of each depth-`m` block, keyed by canonical encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeType {
    block_depth: usize,
    x_card: usize,
    z_card: usize,
    counts: BTreeMap<u64, usize>,
}

impl TreeType {
    pub fn counts(&self) -> &BTreeMap<u64, usize> {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn block_depth(&self) -> usize {
        self.block_depth
    }
}

fn type_key_space(depth: usize, x_card: usize, z_card: usize) -> Result<usize> {
    checked_pow(x_card, tree_size(depth, z_card)?, "code-tree type key space", TYPE_KEY_CAP)
}

pub fn tree_type(ct: &ConcatTree) -> Result<TreeType> {
    type_key_space(ct.block_depth(), ct.x_card(), ct.z_card())?;
    let mut counts = BTreeMap::new();
    for b in &ct.blocks {
        *counts.entry(b.canonical_key()?).or_insert(0) += 1;
    }
    Ok(TreeType { block_depth: ct.block_depth(), x_card: ct.x_card(), z_card: ct.z_card(), counts })
}

/// A uniformly random arrangement of the blocks counted by `t`.
pub fn sample_uniform_from_type<R: Rng + ?Sized>(t: &TreeType, rng: &mut R) -> Result<ConcatTree> {
    let mut blocks = Vec::with_capacity(t.total());
    for (&key, &count) in &t.counts {
        let tree = CodeTree::from_key(t.block_depth, t.x_card, t.z_card, key)?;
        blocks.extend(std::iter::repeat(tree).take(count));
    }
    blocks.shuffle(rng);
    ConcatTree::new(blocks)
}

/// One concatenated tree per message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// Nats per channel use.
    pub rate: f64,
    pub m_count: u64,
    pub trees: Vec<ConcatTree>,
}

/// Number of messages `⌈e^{nR}⌉` for rate `R` over `n` channel uses.
pub fn message_count(rate: f64, n: usize) -> Result<u64> {
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument("rate must be non-negative".into()));
    }
    let m = (n as f64 * rate).exp().ceil();
    if m > MESSAGE_CAP as f64 {
        return Err(Error::CapExceeded { what: "codebook messages", size: m as u128, cap: MESSAGE_CAP as u128 });
    }
    Ok(m as u64)
}

impl Codebook {
    pub fn new(trees: Vec<ConcatTree>) -> Result<Self> {
        let first = trees.first().ok_or_else(|| Error::InvalidArgument("empty codebook".into()))?;
        let shape = (first.n_blocks(), first.block_depth(), first.x_card(), first.z_card());
        if trees.iter().any(|t| (t.n_blocks(), t.block_depth(), t.x_card(), t.z_card()) != shape) {
            return Err(Error::InvalidArgument("codebook trees must share their shape".into()));
        }
        let m = trees.len() as u64;
        let rate = (m as f64).ln() / first.depth() as f64;
        Ok(Self { rate, m_count: m, trees })
    }

    /// `m_count` messages, each block drawn from `q` on its own seeded stream.
    pub fn generate(q: &CausalConditioning, n_blocks: usize, m_count: u64, seed: u64) -> Result<Self> {
        if m_count == 0 || m_count > MESSAGE_CAP {
            return Err(Error::CapExceeded { what: "codebook messages", size: m_count as u128, cap: MESSAGE_CAP as u128 });
        }
        if n_blocks == 0 {
            return Err(Error::InvalidArgument("need at least one block".into()));
        }
        let trees = (0..m_count)
            .into_par_iter()
            .map(|w| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w);
                ConcatTree::new((0..n_blocks).map(|_| sample_codetree(q, &mut rng)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(trees)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.trees[0].depth()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let t = &self.trees[0];
        serde_json::json!({
            "rate_nats": self.rate,
            "m_count": self.m_count,
            "n_blocks": t.n_blocks(),
            "block_depth": t.block_depth(),
            "x_card": t.x_card(),
            "z_card": t.z_card(),
            "messages": self.trees.iter().map(ConcatTree::symbols).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n_blocks: usize,
            block_depth: usize,
            x_card: usize,
            z_card: usize,
            messages: Vec<Vec<usize>>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        let d = tree_size(raw.block_depth, raw.z_card)?;
        let trees = raw
            .messages
            .into_iter()
            .map(|syms| {
                if syms.len() != d * raw.n_blocks {
                    return Err(Error::InvalidArgument("message symbol vector has the wrong length".into()));
                }
                let blocks = syms
                    .chunks(d)
                    .map(|c| CodeTree::new(raw.block_depth, raw.x_card, raw.z_card, c.to_vec()))
                    .collect::<Result<Vec<_>>>()?;
                ConcatTree::new(blocks)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(trees)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subcode {
    pub codebook: Codebook,
    pub dominant: TreeType,
    /// Message indices (in the parent codebook) kept in the subcode.
    pub indices: Vec<usize>,
    /// `|X|^{D(m)} ln(N+1) / (N m)`.
    pub rate_penalty: f64,
}

/// Keeps the first messages whose tree type is the most frequent one.
pub fn dominant_type_subcode(cb: &Codebook) -> Result<Subcode> {
    if cb.is_empty() {
        return Err(Error::InvalidArgument("empty codebook".into()));
    }
    let first = &cb.trees[0];
    let (n, m) = (first.n_blocks(), first.block_depth());
    let keys = type_key_space(m, first.x_card(), first.z_card())?;
    let types = cb.trees.iter().map(tree_type).collect::<Result<Vec<_>>>()?;
    let mut freq: BTreeMap<&TreeType, usize> = BTreeMap::new();
    for t in &types {
        *freq.entry(t).or_insert(0) += 1;
    }
    // BTreeMap iterates in canonical order, so the first maximum wins ties
    let (dominant, _) = freq.iter().fold((types[0].clone(), 0usize), |best, (t, &c)| {
        if c > best.1 {
            ((*t).clone(), c)
        } else {
            best
        }
    });
    let type_bound = ((n + 1) as f64).powf(keys as f64);
    let target = ((cb.m_count as f64 / type_bound).ceil() as usize).max(1);
    let indices: Vec<usize> = types.iter().enumerate().filter(|(_, t)| **t == dominant).map(|(i, _)| i).take(target).collect();
    let codebook = Codebook::new(indices.iter().map(|&i| cb.trees[i].clone()).collect())?;
    let rate_penalty = keys as f64 * ((n + 1) as f64).ln() / (n * m) as f64;
    Ok(Subcode { codebook, dominant, indices, rate_penalty })
}

/// Number of distinct tree types among the codebook's messages.
pub fn distinct_types(cb: &Codebook) -> Result<usize> {
    let mut seen = std::collections::BTreeSet::new();
    for t in &cb.trees {
        seen.insert(tree_type(t)?);
    }
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::digits;

    #[test]
    fn sizes() {
        assert_eq!(tree_size(2, 2).unwrap(), 3);
        assert_eq!(tree_size(1, 5).unwrap(), 1);
        assert_eq!(tree_size(3, 2).unwrap(), 7);
        assert_eq!(tree_size(4, 1).unwrap(), 4);
        assert!(tree_size(0, 2).is_err());
        assert!(tree_size(80, 3).is_err());
    }

    #[test]
    fn binary_depth_two_path() {
        let t = CodeTree::new(2, 2, 2, vec![1, 0, 1]).unwrap();
        assert_eq!(t.path(&[1]).unwrap(), vec![1, 1]);
        assert_eq!(t.path(&[0]).unwrap(), vec![1, 0]);
        assert!(t.path(&[2]).is_err());
        let root = CodeTree::new(1, 2, 2, vec![1]).unwrap();
        assert_eq!(root.path(&[]).unwrap(), vec![1]);
    }

    #[test]
    fn uniform_policy_gives_uniform_trees() {
        let q = CausalConditioning::uniform(2, 2, 2);
        for key in 0..8 {
            let t = CodeTree::from_key(2, 2, 2, key).unwrap();
            assert!((tree_probability(&q, &t).unwrap() - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_policy_gives_one_tree() {
        let q = CausalConditioning::deterministic(2, 2, 2, |i, x, z| if i == 1 { 1 } else { x[0] ^ z[0] });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_codetree(&q, &mut rng);
        assert_eq!(t.symbols(), &[1, 1, 0]);
        assert_eq!(tree_probability(&q, &t).unwrap(), 1.0);
    }

    #[test]
    fn concat_path_uses_blockwise_feedback() {
        let a = CodeTree::new(2, 2, 2, vec![0, 1, 0]).unwrap();
        let b = CodeTree::new(2, 2, 2, vec![1, 1, 0]).unwrap();
        let ct = ConcatTree::new(vec![a, b]).unwrap();
        assert_eq!(ct.path(&[0, 0, 0]).unwrap(), vec![0, 1, 1, 1]);
        // the boundary symbol z_2 is ignored
        assert_eq!(ct.path(&[0, 1, 1]).unwrap(), vec![0, 1, 1, 0]);
    }

    #[test]
    fn types_and_tie_break() {
        let a = CodeTree::new(1, 2, 2, vec![0]).unwrap();
        let b = CodeTree::new(1, 2, 2, vec![1]).unwrap();
        let same = ConcatTree::new(vec![a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(tree_type(&same).unwrap().counts().len(), 1);
        let cb = Codebook::new(vec![
            ConcatTree::new(vec![b.clone()]).unwrap(),
            ConcatTree::new(vec![a.clone()]).unwrap(),
        ])
        .unwrap();
        let sub = dominant_type_subcode(&cb).unwrap();
        // both types appear once; key 0 sorts first
        assert_eq!(sub.indices, vec![1]);
        assert!((sub.rate_penalty - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn codebook_round_trip_and_digits() {
        let q = CausalConditioning::uniform(2, 2, 2);
        let cb = Codebook::generate(&q, 3, 5, 42).unwrap();
        assert_eq!(Codebook::from_json(&cb.to_json()).unwrap(), cb);
        assert_eq!(Codebook::generate(&q, 3, 5, 42).unwrap(), cb);
        assert_eq!(digits(5, 2, 3), vec![1, 0, 1]);
        assert!(message_count(1.0, 30).is_err());
        assert_eq!(message_count(0.0, 4).unwrap(), 1);
    }
}
