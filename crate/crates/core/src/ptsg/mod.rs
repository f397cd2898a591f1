//! Probabilistic tree substitution grammar inferred with a Dirichlet-process
//! prior and Gibbs sampling.

mod fragment;
mod sampler;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use fragment::{FragNode, Fragment};
pub use sampler::{Sampler, INIT_ROOT_RATE};

use crate::dftree::{corpus_mode, DfTree, DfTreeError, GrammarSignature, Production, TreeMode};

#[derive(Debug, thiserror::Error)]
pub enum PtsgError {
    #[error(transparent)]
    Corpus(#[from] DfTreeError),
    #[error("production {lhs} -> {rhs:?} is not in the pcfg")]
    UnknownProduction { lhs: String, rhs: Vec<String> },
    #[error("concentration parameter must be positive and finite, got {0}")]
    BadAlpha(f64),
}

/// P0(T): product of the pcfg probabilities of the fragment's productions.
pub fn base_measure(fragment: &Fragment, pcfg: &GrammarSignature) -> Result<f64, PtsgError> {
    fragment
        .log_base_measure(pcfg)
        .map(f64::exp)
        .map_err(|(lhs, rhs)| PtsgError::UnknownProduction { lhs, rhs })
}

/// (count(T) + α·P0(T)) / (count(h(T)) + α)
pub fn posterior_prob(count: u64, root_count: u64, alpha: f64, p0: f64) -> f64 {
    (count as f64 + alpha * p0) / (root_count as f64 + alpha)
}

/// Pr(z_t = 0), the probability of merging `t` into its parent's fragment:
/// Pr(T_join) / (Pr(T_join) + Pr(T_s)·Pr(T_t)).
pub fn merge_probability(p_join: f64, p_s: f64, p_t: f64) -> f64 {
    p_join / (p_join + p_s * p_t)
}

/// [`merge_probability`] on natural logs of the three posteriors.
pub fn log_merge_probability(lp_join: f64, lp_s: f64, lp_t: f64) -> f64 {
    1.0 / (1.0 + (lp_s + lp_t - lp_join).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MineParams {
    pub alpha: f64,
    pub iterations: u32,
    pub seed: u64,
    /// Fragments whose normalized posterior falls below this are dropped.
    pub min_frag_prob: f64,
    /// Treat `Pr_post(joint) / (Pr_post(joint) + Pr_post(s)·Pr_post(t))` as
    /// the probability of splitting at a node instead of merging there.
    #[serde(default)]
    pub invert_split: bool,
}

impl Default for MineParams {
    fn default() -> Self {
        MineParams {
            alpha: 5.0,
            iterations: 50,
            seed: 0,
            min_frag_prob: 0.5,
            invert_split: false,
        }
    }
}

/// One fragment of the mined grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrammarFragment {
    pub root: String,
    pub tree: Fragment,
    pub count: u64,
    /// Posterior probability normalized over the fragments sharing `root`.
    pub prob: f64,
    /// Unnormalized Pr_post at the final state.
    pub post: f64,
    /// Base measure P0.
    pub p0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtsgGrammar {
    pub alpha: f64,
    pub iterations: u32,
    pub seed: u64,
    pub mode: TreeMode,
    pub min_frag_prob: f64,
    #[serde(default)]
    pub invert_split: bool,
    pub fragments: Vec<GrammarFragment>,
    pub pcfg: Vec<Production>,
}

impl PtsgGrammar {
    pub fn pcfg(&self) -> GrammarSignature {
        GrammarSignature::from_productions(self.pcfg.clone())
    }

    /// Sum of `prob` per root label.
    pub fn prob_sums(&self) -> BTreeMap<String, f64> {
        let mut sums = BTreeMap::new();
        for f in &self.fragments {
            *sums.entry(f.root.clone()).or_insert(0.0) += f.prob;
        }
        sums
    }

    /// Keeps fragments with `prob >= threshold`.
    pub fn filtered(mut self, threshold: f64) -> PtsgGrammar {
        self.fragments.retain(|f| f.prob >= threshold);
        self.min_frag_prob = self.min_frag_prob.max(threshold);
        self
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("grammar serializes")
    }

    pub fn from_json_str(s: &str) -> serde_json::Result<PtsgGrammar> {
        serde_json::from_str(s)
    }
}

/// Grammar read off the sampler's current state, before filtering.
pub fn grammar_from_state(s: &Sampler, mode: TreeMode, params: &MineParams) -> PtsgGrammar {
    let frags = s.fragments();
    let mut log_norm: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (f, _, _, lp) in &frags {
        log_norm.entry(f.root_label()).or_default().push(*lp);
    }
    let log_norm: BTreeMap<&str, f64> = log_norm
        .into_iter()
        .map(|(k, v)| {
            let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (k, m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln())
        })
        .collect();
    let mut fragments: Vec<GrammarFragment> = frags
        .iter()
        .map(|(f, count, lp0, lp)| GrammarFragment {
            root: f.root_label().to_string(),
            tree: f.clone(),
            count: *count,
            prob: (lp - log_norm[f.root_label()]).exp(),
            post: lp.exp(),
            p0: lp0.exp(),
        })
        .collect();
    fragments.sort_by(|a, b| {
        b.prob
            .total_cmp(&a.prob)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.tree.serialize().cmp(&b.tree.serialize()))
    });
    PtsgGrammar {
        alpha: params.alpha,
        iterations: params.iterations,
        seed: params.seed,
        mode,
        min_frag_prob: 0.0,
        invert_split: params.invert_split,
        fragments,
        pcfg: s.pcfg().productions.clone(),
    }
}

/// Runs the sampler and returns the unfiltered grammar.
///
/// Trees join the sampling corpus in `min(10, iterations)` contiguous
/// batches, one at the start of each of the first iterations; with zero
/// iterations every tree is counted with its initial indicators.
pub fn mine_unfiltered(corpus: &[DfTree], params: &MineParams) -> Result<PtsgGrammar, PtsgError> {
    let mode = corpus_mode(corpus)?;
    let mut s = Sampler::new(corpus, params.alpha, params.seed)?;
    s.set_invert_split(params.invert_split);
    let n = corpus.len();
    let batches = params.iterations.min(10) as usize;
    if batches == 0 {
        s.activate_all();
    }
    for it in 0..params.iterations as usize {
        if it < batches {
            for t in it * n / batches..(it + 1) * n / batches {
                s.activate(t);
            }
        }
        s.sweep();
        log::info!(
            "iteration {}: {} trees, {} fragments",
            it + 1,
            s.active_trees(),
            s.fragment_types()
        );
    }
    Ok(grammar_from_state(&s, mode, params))
}

/// Mines a grammar and drops fragments below `params.min_frag_prob`.
pub fn mine(corpus: &[DfTree], params: &MineParams) -> Result<PtsgGrammar, PtsgError> {
    Ok(mine_unfiltered(corpus, params)?.filtered(params.min_frag_prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dftree::{extract_pcfg, Node};

    #[test]
    fn posterior_reduces_to_base_measure_without_counts() {
        assert_eq!(posterior_prob(0, 0, 5.0, 0.37), 0.37);
    }

    #[test]
    fn posterior_tends_to_frequency_as_alpha_vanishes() {
        let p = posterior_prob(3, 12, 1e-12, 0.9);
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn merge_probability_edge_cases() {
        assert_eq!(merge_probability(0.06, 0.2, 0.3), 0.06 / (0.06 + 0.2 * 0.3));
        assert_eq!(merge_probability(0.25, 0.0, 0.7), 1.0);
        assert_eq!(log_merge_probability(-1.5, -0.5, -1.0), 0.5);
    }

    #[test]
    fn base_measure_multiplies_productions() {
        let t = |root: Node| DfTree {
            mode: TreeMode::Plain,
            file: "f".into(),
            method: "m".into(),
            root,
        };
        let abc = || Node::new("A", vec![Node::new("B", vec![Node::leaf("D")]), Node::leaf("C")]);
        let b2 = || Node::new("A", vec![Node::new("B", vec![Node::leaf("E")]), Node::leaf("C")]);
        // A -> B C always; B -> D in 1 of 4, B -> E in 3 of 4.
        let corpus = vec![t(abc()), t(b2()), t(b2()), t(b2())];
        let g = extract_pcfg(&corpus).unwrap();
        let f = Fragment::from_tree(&abc());
        assert_eq!(base_measure(&f, &g).unwrap(), 0.25);
        let shallow = Fragment::prefix(&abc(), 1);
        assert_eq!(base_measure(&shallow, &g).unwrap(), 1.0);
        let unknown = Fragment::new(FragNode::internal("Q", vec![FragNode::frontier("A")]));
        assert!(matches!(base_measure(&unknown, &g), Err(PtsgError::UnknownProduction { .. })));
    }
}
