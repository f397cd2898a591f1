//! Gibbs sampler over fragment-root indicators.
//!
//! The corpus is flattened into arrays indexed by a global node id. Each
//! internal non-root node carries `z` (true: it roots its own fragment).
//! Fragments are keyed by a token serialization so the count table never
//! depends on string formatting.
//!
//! Random draws, all from one ChaCha8 stream seeded with the user seed:
//! 1. initialization, trees in corpus order, nodes in pre-order: one `f64`
//!    per internal non-root node (`z = 1` iff it is below 0.9);
//! 2. each iteration: one shuffle of the active tree list, then for every
//!    tree one shuffle of its sampleable nodes, then one `f64` per step.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fragment::{FragNode, Fragment};
use super::{log_merge_probability, PtsgError};
use crate::dftree::{extract_pcfg, DfTree, GrammarSignature, Node};

const OPEN: u32 = 0;
const CLOSE: u32 = 1;
const FRONTIER: u32 = 2;
const SYM_BASE: u32 = 3;

/// Share of non-root nodes initialized as fragment roots.
pub const INIT_ROOT_RATE: f64 = 0.9;

type Key = Vec<u32>;

#[derive(Clone, Debug)]
struct Stat {
    count: u64,
    log_p0: f64,
}

pub struct Sampler {
    alpha: f64,
    ln_alpha: f64,
    symbols: Vec<String>,
    sym: Vec<u32>,
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    /// ln P(production) of each internal node; 0 for leaves.
    lp: Vec<f64>,
    tree_roots: Vec<u32>,
    /// Sampleable nodes (internal, non-root) of each tree, pre-order.
    tree_nodes: Vec<Vec<u32>>,
    z: Vec<bool>,
    active: Vec<bool>,
    counts: HashMap<Key, Stat>,
    root_counts: Vec<u64>,
    rng: ChaCha8Rng,
    pcfg: GrammarSignature,
    steps: u64,
    invert_split: bool,
}

impl Sampler {
    /// Flattens `corpus` and draws the initial indicators. No tree is
    /// active yet.
    pub fn new(corpus: &[DfTree], alpha: f64, seed: u64) -> Result<Sampler, PtsgError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PtsgError::BadAlpha(alpha));
        }
        let pcfg = extract_pcfg(corpus)?;
        let mut s = Sampler {
            alpha,
            ln_alpha: alpha.ln(),
            symbols: Vec::new(),
            sym: Vec::new(),
            parent: Vec::new(),
            children: Vec::new(),
            lp: Vec::new(),
            tree_roots: Vec::new(),
            tree_nodes: Vec::new(),
            z: Vec::new(),
            active: vec![false; corpus.len()],
            counts: HashMap::new(),
            root_counts: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            pcfg,
            steps: 0,
            invert_split: false,
        };
        let mut sym_ids: HashMap<String, u32> = HashMap::new();
        for t in corpus {
            let root = s.flatten(&t.root, u32::MAX, &mut sym_ids);
            s.tree_roots.push(root);
        }
        s.root_counts = vec![0; s.symbols.len()];
        for (i, &root) in s.tree_roots.iter().enumerate() {
            let end = s.tree_roots.get(i + 1).copied().unwrap_or(s.sym.len() as u32);
            s.tree_nodes.push((root + 1..end).filter(|&n| !s.children[n as usize].is_empty()).collect());
        }
        for n in 0..s.sym.len() {
            let sampleable = !s.children[n].is_empty() && s.parent[n] != u32::MAX;
            s.z[n] = if sampleable {
                s.rng.gen::<f64>() < INIT_ROOT_RATE
            } else {
                s.parent[n] == u32::MAX
            };
        }
        Ok(s)
    }

    fn flatten(&mut self, n: &Node, parent: u32, sym_ids: &mut HashMap<String, u32>) -> u32 {
        let id = self.sym.len() as u32;
        let next = sym_ids.len() as u32;
        let sym = *sym_ids.entry(n.label.clone()).or_insert_with(|| {
            self.symbols.push(n.label.clone());
            next
        });
        self.sym.push(sym);
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.lp.push(if n.is_leaf() {
            0.0
        } else {
            self.pcfg.node_prob(n).expect("pcfg built from this corpus").ln()
        });
        self.z.push(false);
        for c in &n.children {
            let cid = self.flatten(c, id, sym_ids);
            self.children[id as usize].push(cid);
        }
        id
    }

    pub fn pcfg(&self) -> &GrammarSignature {
        &self.pcfg
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tree_count(&self) -> usize {
        self.tree_roots.len()
    }

    pub fn active_trees(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Number of distinct fragments currently counted.
    pub fn fragment_types(&self) -> usize {
        self.counts.len()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Sampleable nodes of tree `t` in pre-order.
    pub fn sampleable(&self, tree: usize) -> &[u32] {
        &self.tree_nodes[tree]
    }

    pub fn is_root(&self, node: u32) -> bool {
        self.z[node as usize]
    }

    /// Tree index owning `node`.
    pub fn tree_of(&self, node: u32) -> usize {
        self.tree_roots.partition_point(|&r| r <= node) - 1
    }

    /// Serializes the fragment rooted at `root`, treating `t` as a root iff
    /// `t_root` (when `t` is given).
    fn key(&self, root: u32, t: Option<(u32, bool)>) -> (Key, f64) {
        let mut key = Vec::new();
        let mut lp = 0.0;
        self.key_into(root, t, &mut key, &mut lp);
        (key, lp)
    }

    fn key_into(&self, n: u32, t: Option<(u32, bool)>, key: &mut Key, lp: &mut f64) {
        key.push(OPEN);
        key.push(self.sym[n as usize] + SYM_BASE);
        *lp += self.lp[n as usize];
        for &c in &self.children[n as usize] {
            let is_root = match t {
                Some((tn, r)) if tn == c => r,
                _ => self.z[c as usize],
            };
            if is_root {
                key.push(FRONTIER);
                key.push(self.sym[c as usize] + SYM_BASE);
            } else {
                self.key_into(c, t, key, lp);
            }
        }
        key.push(CLOSE);
    }

    fn root_sym(key: &Key) -> usize {
        (key[1] - SYM_BASE) as usize
    }

    fn add(&mut self, key: Key, log_p0: f64) {
        self.root_counts[Self::root_sym(&key)] += 1;
        self.counts
            .entry(key)
            .or_insert(Stat { count: 0, log_p0 })
            .count += 1;
    }

    fn remove(&mut self, key: &Key) {
        self.root_counts[Self::root_sym(key)] -= 1;
        let stat = self.counts.get_mut(key).expect("removing an uncounted fragment");
        stat.count -= 1;
        if stat.count == 0 {
            self.counts.remove(key);
        }
    }

    /// ln Pr_post of a fragment under the current counts.
    fn log_post(&self, key: &Key, log_p0: f64) -> f64 {
        let c = self.counts.get(key).map_or(0, |s| s.count) as f64;
        let h = self.root_counts[Self::root_sym(key)] as f64;
        ln_add(c, self.ln_alpha + log_p0) - (h + self.alpha).ln()
    }

    /// Fragment roots of one tree in pre-order.
    fn roots_of(&self, tree: usize) -> Vec<u32> {
        let root = self.tree_roots[tree];
        let end = self.tree_roots.get(tree + 1).copied().unwrap_or(self.sym.len() as u32);
        (root..end).filter(|&n| self.z[n as usize]).collect()
    }

    /// Adds the fragments of tree `tree` to the counts.
    pub fn activate(&mut self, tree: usize) {
        if self.active[tree] {
            return;
        }
        self.active[tree] = true;
        for r in self.roots_of(tree) {
            let (k, lp) = self.key(r, None);
            self.add(k, lp);
        }
    }

    pub fn activate_all(&mut self) {
        for t in 0..self.tree_count() {
            self.activate(t);
        }
    }

    fn fragment_root_above(&self, t: u32) -> u32 {
        let mut s = self.parent[t as usize];
        while !self.z[s as usize] {
            s = self.parent[s as usize];
        }
        s
    }

    /// See [`MineParams::invert_split`](super::MineParams::invert_split).
    pub fn set_invert_split(&mut self, on: bool) {
        self.invert_split = on;
    }

    /// Resamples the indicator of node `t`, an internal non-root node of an
    /// active tree.
    pub fn gibbs_step(&mut self, t: u32) {
        debug_assert!(self.active[self.tree_of(t)]);
        debug_assert!(!self.children[t as usize].is_empty() && self.parent[t as usize] != u32::MAX);
        let s = self.fragment_root_above(t);
        let (ks, lps0) = self.key(s, Some((t, true)));
        let (kt, lpt0) = self.key(t, None);
        let (kj, lpj0) = self.key(s, Some((t, false)));
        if self.z[t as usize] {
            self.remove(&ks);
            self.remove(&kt);
        } else {
            self.remove(&kj);
        }
        let lps = self.log_post(&ks, lps0);
        let lpt = self.log_post(&kt, lpt0);
        let lpj = self.log_post(&kj, lpj0);
        let mut p_merge = log_merge_probability(lpj, lps, lpt);
        if self.invert_split {
            p_merge = 1.0 - p_merge;
        }
        let u: f64 = self.rng.gen();
        let merged = u < p_merge;
        self.z[t as usize] = !merged;
        if merged {
            self.add(kj, lpj0);
        } else {
            self.add(ks, lps0);
            self.add(kt, lpt0);
        }
        self.steps += 1;
    }

    /// One pass over the active trees and their nodes in fresh random orders.
    pub fn sweep(&mut self) {
        let mut trees: Vec<usize> = (0..self.tree_count()).filter(|&t| self.active[t]).collect();
        trees.shuffle(&mut self.rng);
        for tree in trees {
            let mut nodes = self.tree_nodes[tree].clone();
            nodes.shuffle(&mut self.rng);
            for t in nodes {
                self.gibbs_step(t);
            }
        }
    }

    /// Counts rebuilt from scratch from the current indicators, as
    /// (serialization, count) sorted by serialization.
    pub fn recount(&self) -> Vec<(String, u64)> {
        let mut fresh: HashMap<Key, u64> = HashMap::new();
        for tree in (0..self.tree_count()).filter(|&t| self.active[t]) {
            for r in self.roots_of(tree) {
                *fresh.entry(self.key(r, None).0).or_default() += 1;
            }
        }
        let mut out: Vec<_> = fresh.iter().map(|(k, &c)| (self.decode(k).serialize(), c)).collect();
        out.sort();
        out
    }

    /// The incremental count table in the same form as [`Sampler::recount`].
    pub fn counts(&self) -> Vec<(String, u64)> {
        let mut out: Vec<_> = self
            .counts
            .iter()
            .map(|(k, s)| (self.decode(k).serialize(), s.count))
            .collect();
        out.sort();
        out
    }

    /// Per-root-label totals of the incremental table agree with it.
    pub fn root_counts_consistent(&self) -> bool {
        let mut per = vec![0u64; self.symbols.len()];
        for (k, s) in &self.counts {
            per[Self::root_sym(k)] += s.count;
        }
        per == self.root_counts
    }

    fn decode(&self, key: &Key) -> Fragment {
        fn go(s: &Sampler, key: &[u32], pos: &mut usize) -> FragNode {
            match key[*pos] {
                FRONTIER => {
                    let label = s.symbols[(key[*pos + 1] - SYM_BASE) as usize].clone();
                    *pos += 2;
                    FragNode::frontier(label)
                }
                OPEN => {
                    let label = s.symbols[(key[*pos + 1] - SYM_BASE) as usize].clone();
                    *pos += 2;
                    let mut children = Vec::new();
                    while key[*pos] != CLOSE {
                        children.push(go(s, key, pos));
                    }
                    *pos += 1;
                    FragNode::internal(label, children)
                }
                other => unreachable!("bad fragment token {other}"),
            }
        }
        let mut pos = 0;
        Fragment::new(go(self, key, &mut pos))
    }

    /// Every counted fragment with its count, ln P0 and ln Pr_post, sorted by
    /// serialization.
    pub fn fragments(&self) -> Vec<(Fragment, u64, f64, f64)> {
        let mut out: Vec<_> = self
            .counts
            .iter()
            .map(|(k, s)| (self.decode(k), s.count, s.log_p0, self.log_post(k, s.log_p0)))
            .collect();
        out.sort_by_cached_key(|(f, ..)| f.serialize());
        out
    }
}

/// ln(c + e^a) for c ≥ 0.
fn ln_add(c: f64, a: f64) -> f64 {
    if c <= 0.0 {
        return a;
    }
    let lc = c.ln();
    let (hi, lo) = if lc > a { (lc, a) } else { (a, lc) };
    hi + (lo - hi).exp().ln_1p()
}
