//! Pruning, ranking and matching of mined fragments.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dftree::{DfTree, Node};
use crate::ptsg::{FragNode, Fragment, PtsgGrammar};

#[derive(Debug, thiserror::Error)]
pub enum IdiomError {
    #[error("fragment {0} has zero base probability")]
    DegenerateProbability(String),
    #[error("weights file: {0}")]
    Weights(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub coverage: f64,
    pub ce: f64,
    pub iou: f64,
    /// weight × support × IoU
    pub iou_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Idiom {
    pub fragment: Fragment,
    pub root: String,
    /// Corpus trees with at least one site.
    pub support: usize,
    pub size: usize,
    /// Normalized posterior from the grammar.
    pub prob: f64,
    /// Unnormalized posterior Pr_post.
    pub post: f64,
    pub p0: f64,
    pub scores: Scores,
}

impl Idiom {
    pub fn serialization(&self) -> String {
        self.fragment.serialize()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "root": self.root,
            "tree": self.fragment,
            "serialized": self.serialization(),
            "support": self.support,
            "size": self.size,
            "prob": self.prob,
            "scores": self.scores,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranking {
    Coverage,
    Ce,
    Iou,
}

impl std::str::FromStr for Ranking {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coverage" | "c" => Ok(Ranking::Coverage),
            "ce" => Ok(Ranking::Ce),
            "iou" => Ok(Ranking::Iou),
            _ => Err(format!("unknown ranking `{s}` (expected coverage, ce or iou)")),
        }
    }
}

/// Root-label weights for the IoU score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub table: BTreeMap<String, f64>,
    pub default: f64,
}

impl Default for Weights {
    fn default() -> Self {
        let table = [
            ("Foreach", 1.0),
            ("If", 0.8),
            ("Region", 0.5),
            ("PrimitiveWriteList", 0.3),
            ("CollectionWriteList", 0.3),
            ("ObjectWriteList", 0.3),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Weights { table, default: 0.2 }
    }
}

impl Weights {
    /// Exact label first, then the part before `:`, then the default.
    pub fn weight(&self, label: &str) -> f64 {
        self.table
            .get(label)
            .or_else(|| self.table.get(label.split(':').next().unwrap_or(label)))
            .copied()
            .unwrap_or(self.default)
    }

    pub fn scaled(&self, k: f64) -> Weights {
        Weights {
            table: self.table.iter().map(|(l, w)| (l.clone(), w * k)).collect(),
            default: self.default * k,
        }
    }

    /// Reads `{"Foreach": 1.0, ..., "default": 0.2}`; unlisted labels keep
    /// their built-in weight.
    pub fn from_json_str(s: &str) -> Result<Weights, IdiomError> {
        let map: BTreeMap<String, f64> = serde_json::from_str(s).map_err(|e| IdiomError::Weights(e.to_string()))?;
        let mut w = Weights::default();
        for (k, v) in map {
            if !(0.0..=1.0).contains(&v) {
                return Err(IdiomError::Weights(format!("weight of `{k}` is {v}, outside [0, 1]")));
            }
            if k == "default" {
                w.default = v;
            } else {
                w.table.insert(k, v);
            }
        }
        Ok(w)
    }
}

fn aligns(f: &FragNode, n: &Node) -> bool {
    if f.label != n.label {
        return false;
    }
    if f.frontier {
        return true;
    }
    f.children.len() == n.children.len() && f.children.iter().zip(&n.children).all(|(fc, nc)| aligns(fc, nc))
}

/// A node of a corpus tree where a fragment aligns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Site<'t> {
    /// Child indices from the tree root.
    pub path: Vec<usize>,
    pub node: &'t Node,
}

/// Every node of `tree` at which `fragment` aligns, in pre-order.
pub fn match_fragment<'t>(fragment: &Fragment, tree: &'t DfTree) -> Vec<Site<'t>> {
    fn go<'t>(f: &FragNode, n: &'t Node, path: &mut Vec<usize>, out: &mut Vec<Site<'t>>) {
        if aligns(f, n) {
            out.push(Site {
                path: path.clone(),
                node: n,
            });
        }
        for (i, c) in n.children.iter().enumerate() {
            path.push(i);
            go(f, c, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(&fragment.root, &tree.root, &mut Vec::new(), &mut out);
    out
}

pub fn matches_anywhere(fragment: &Fragment, tree: &DfTree) -> bool {
    fn go(f: &FragNode, n: &Node) -> bool {
        aligns(f, n) || n.children.iter().any(|c| go(f, c))
    }
    go(&fragment.root, &tree.root)
}

pub fn support(fragment: &Fragment, corpus: &[DfTree]) -> usize {
    corpus.par_iter().filter(|t| matches_anywhere(fragment, t)).count()
}

/// Share of the fragment that is fixed rather than frontier. The subtree a
/// site spans is cut at the subtrees matched by frontier nodes (their roots
/// included), so it has exactly as many nodes as the fragment and the ratio
/// is the same at every site.
pub fn iou(fragment: &Fragment) -> f64 {
    fragment.internal_count() as f64 / fragment.size() as f64
}

/// Keeps fragments seen in at least `c_min` corpus trees and having at
/// least `n_min` nodes.
pub fn prune(grammar: &PtsgGrammar, corpus: &[DfTree], c_min: usize, n_min: usize) -> Vec<Idiom> {
    grammar
        .fragments
        .iter()
        .filter(|f| f.tree.size() >= n_min)
        .filter_map(|f| {
            let support = support(&f.tree, corpus);
            (support >= c_min).then(|| Idiom {
                fragment: f.tree.clone(),
                root: f.root.clone(),
                support,
                size: f.tree.size(),
                prob: f.prob,
                post: f.post,
                p0: f.p0,
                scores: Scores::default(),
            })
        })
        .collect()
}

/// Fills support, coverage and IoU against `corpus`.
fn score_base(idioms: &[Idiom], corpus: &[DfTree]) -> Vec<Idiom> {
    idioms
        .iter()
        .map(|i| {
            let mut i = i.clone();
            i.support = support(&i.fragment, corpus);
            i.scores.coverage = if corpus.is_empty() {
                0.0
            } else {
                i.support as f64 / corpus.len() as f64
            };
            i.scores.iou = iou(&i.fragment);
            i
        })
        .collect()
}

fn tie_break(a: &Idiom, b: &Idiom) -> Ordering {
    b.size.cmp(&a.size).then_with(|| a.serialization().cmp(&b.serialization()))
}

fn sort_by(mut idioms: Vec<Idiom>, key: impl Fn(&Idiom) -> f64) -> Vec<Idiom> {
    idioms.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| tie_break(a, b)));
    idioms
}

pub fn rank_coverage(idioms: &[Idiom], corpus: &[DfTree]) -> Vec<Idiom> {
    sort_by(score_base(idioms, corpus), |i| i.scores.coverage)
}

/// What the CE log-ratio is averaged over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CeBase {
    /// Every fragment node, frontier included.
    #[default]
    Node,
    /// Expanded nodes only, one per production used.
    Production,
}

impl std::str::FromStr for CeBase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "node" => Ok(CeBase::Node),
            "production" => Ok(CeBase::Production),
            _ => Err(format!("unknown CE base `{s}` (expected node or production)")),
        }
    }
}

/// coverage × (1/|nodes|) × ln(Pr_post / P0)
pub fn rank_ce(idioms: &[Idiom], corpus: &[DfTree]) -> Result<Vec<Idiom>, IdiomError> {
    rank_ce_with(idioms, corpus, CeBase::Node)
}

pub fn rank_ce_with(idioms: &[Idiom], corpus: &[DfTree], base: CeBase) -> Result<Vec<Idiom>, IdiomError> {
    let mut scored = score_base(idioms, corpus);
    for i in &mut scored {
        if i.p0 <= 0.0 {
            return Err(IdiomError::DegenerateProbability(i.serialization()));
        }
        let n = match base {
            CeBase::Node => i.size,
            CeBase::Production => i.fragment.internal_count().max(1),
        };
        i.scores.ce = ce_score(i.scores.coverage, n, i.post, i.p0);
    }
    Ok(sort_by(scored, |i| i.scores.ce))
}

pub fn ce_score(coverage: f64, size: usize, post: f64, p0: f64) -> f64 {
    if coverage == 0.0 {
        return 0.0;
    }
    coverage * (post / p0).ln() / size as f64
}

pub fn rank_iou(idioms: &[Idiom], corpus: &[DfTree], weights: &Weights) -> Vec<Idiom> {
    let mut scored = score_base(idioms, corpus);
    for i in &mut scored {
        i.scores.iou_score = weights.weight(&i.root) * i.support as f64 * i.scores.iou;
    }
    // Compared exactly: rounding in the f64 product would otherwise let a
    // uniform rescaling of the weights reorder equal or near-equal scores.
    scored.sort_by(|a, b| {
        let key = |i: &Idiom| (weights.weight(&i.root), i.support as u128 * i.fragment.internal_count() as u128);
        let ((wa, na), (wb, nb)) = (key(a), key(b));
        cmp_scaled(wb, nb * a.size as u128, wa, na * b.size as u128)
            .unwrap_or_else(|| b.scores.iou_score.total_cmp(&a.scores.iou_score))
            .then_with(|| tie_break(a, b))
    });
    scored
}

/// Exact comparison of `wa·na` with `wb·nb` for finite non-negative weights.
/// `None` if an intermediate product does not fit in 128 bits.
fn cmp_scaled(wa: f64, na: u128, wb: f64, nb: u128) -> Option<Ordering> {
    fn split(w: f64) -> (u128, i32) {
        let bits = w.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1 << 52) - 1);
        if exp == 0 {
            (frac as u128, -1074)
        } else {
            ((frac | 1 << 52) as u128, exp - 1075)
        }
    }
    let (ma, ea) = split(wa);
    let (mb, eb) = split(wb);
    let l = ma.checked_mul(na)?;
    let r = mb.checked_mul(nb)?;
    if l == 0 || r == 0 {
        return Some(l.cmp(&r));
    }
    let (bl, br) = (128 - l.leading_zeros() as i32, 128 - r.leading_zeros() as i32);
    if bl + ea != br + eb {
        return Some((bl + ea).cmp(&(br + eb)));
    }
    // Same magnitude, so the shift below keeps both within 128 bits.
    Some(if ea >= eb {
        (l << (ea - eb)).cmp(&r)
    } else {
        l.cmp(&(r << (eb - ea)))
    })
}

pub fn rank(
    idioms: &[Idiom],
    corpus: &[DfTree],
    scheme: Ranking,
    weights: &Weights,
) -> Result<Vec<Idiom>, IdiomError> {
    rank_with(idioms, corpus, scheme, weights, CeBase::Node)
}

pub fn rank_with(
    idioms: &[Idiom],
    corpus: &[DfTree],
    scheme: Ranking,
    weights: &Weights,
    ce_base: CeBase,
) -> Result<Vec<Idiom>, IdiomError> {
    match scheme {
        Ranking::Coverage => Ok(rank_coverage(idioms, corpus)),
        Ranking::Ce => rank_ce_with(idioms, corpus, ce_base),
        Ranking::Iou => Ok(rank_iou(idioms, corpus, weights)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteReport {
    pub file: String,
    pub method: String,
    pub span: Option<[u32; 4]>,
    /// Labels of the matched corpus nodes, pre-order.
    pub labels: Vec<String>,
    /// Variables bound at the matched nodes, pre-order, without repeats.
    pub vars: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdiomReport {
    pub rank: usize,
    pub idiom: Idiom,
    pub sites: Vec<SiteReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub idioms: Vec<IdiomReport>,
}

fn matched_nodes<'t>(f: &FragNode, n: &'t Node, out: &mut Vec<&'t Node>) {
    out.push(n);
    if !f.frontier {
        for (fc, nc) in f.children.iter().zip(&n.children) {
            matched_nodes(fc, nc, out);
        }
    }
}

/// Sites of each idiom in `corpus`, ordered by (file, line, column).
pub fn report(idioms: &[Idiom], corpus: &[DfTree]) -> MatchReport {
    let idioms = idioms
        .iter()
        .enumerate()
        .map(|(rank, idiom)| {
            let mut sites: Vec<SiteReport> = corpus
                .par_iter()
                .flat_map_iter(|t| {
                    match_fragment(&idiom.fragment, t).into_iter().map(move |s| {
                        let mut nodes = Vec::new();
                        matched_nodes(&idiom.fragment.root, s.node, &mut nodes);
                        let mut vars: Vec<String> = Vec::new();
                        for v in nodes.iter().filter_map(|n| n.var.as_ref()) {
                            if !vars.contains(v) {
                                vars.push(v.clone());
                            }
                        }
                        SiteReport {
                            file: t.file.clone(),
                            method: t.method.clone(),
                            span: s.node.span,
                            labels: nodes.iter().map(|n| n.label.clone()).collect(),
                            vars,
                        }
                    })
                })
                .collect();
            sites.sort_by(|a, b| (&a.file, a.span, &a.method).cmp(&(&b.file, b.span, &b.method)));
            IdiomReport {
                rank: rank + 1,
                idiom: idiom.clone(),
                sites,
            }
        })
        .collect();
    MatchReport { idioms }
}

impl MatchReport {
    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .idioms
            .iter()
            .map(|r| {
                let sites: Vec<Value> = r
                    .sites
                    .iter()
                    .map(|s| json!({"file": s.file, "method": s.method, "span": s.span, "labels": s.labels, "vars": s.vars}))
                    .collect();
                json!({"rank": r.rank, "idiom": r.idiom.to_json(), "sites": sites})
            })
            .collect();
        Value::Array(items)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.idioms {
            let _ = writeln!(
                out,
                "# idiom {} (root {}, {} nodes, support {}): {}",
                r.rank,
                r.idiom.root,
                r.idiom.size,
                r.idiom.support,
                r.idiom.serialization()
            );
            for s in &r.sites {
                let at = s.span.map_or(String::from("?"), |sp| format!("{}:{}", sp[0], sp[1]));
                let _ = writeln!(out, "{}:{}\t{}\t{}", s.file, at, s.method, s.vars.join(","));
            }
        }
        out
    }

    /// (file, method) pairs with at least one site of any idiom.
    pub fn flagged_methods(&self) -> std::collections::BTreeSet<(String, String)> {
        self.idioms
            .iter()
            .flat_map(|r| r.sites.iter().map(|s| (s.file.clone(), s.method.clone())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dftree::TreeMode;

    fn tree(root: Node) -> DfTree {
        DfTree {
            mode: TreeMode::Dataflow,
            file: "f.mh".into(),
            method: "m".into(),
            root,
        }
    }

    #[test]
    fn frontier_matches_any_children() {
        let t = tree(Node::new("A", vec![Node::new("B", vec![Node::leaf("x")]), Node::leaf("C")]));
        let f = Fragment::new(FragNode::internal("A", vec![FragNode::frontier("B"), FragNode::internal("C", vec![])]));
        assert_eq!(match_fragment(&f, &t).len(), 1);
        let wrong_arity = Fragment::new(FragNode::internal("A", vec![FragNode::frontier("B")]));
        assert!(match_fragment(&wrong_arity, &t).is_empty());
    }

    #[test]
    fn exact_comparison_sees_through_rounding() {
        assert_eq!(cmp_scaled(0.5, 4, 1.0, 2), Some(Ordering::Equal));
        // f64 0.3 sits just below 3/10.
        assert_eq!(cmp_scaled(0.3, 10, 1.0, 3), Some(Ordering::Less));
        assert_eq!(cmp_scaled(0.0, 9, 1e-300, 1), Some(Ordering::Less));
        assert_eq!(cmp_scaled(0.2, 3, 0.2, 2), Some(Ordering::Greater));
        assert_eq!(cmp_scaled(1.0, u128::MAX, 1.0, 1), None);
        // 0.1 is slightly above 1/10, so ten of them exceed one.
        assert_eq!(cmp_scaled(0.1, 10, 1.0, 1), Some(Ordering::Greater));
        assert_eq!(0.1f64 * 10.0, 1.0);
    }

    #[test]
    fn ce_base_parses() {
        assert_eq!("production".parse::<CeBase>(), Ok(CeBase::Production));
        assert_eq!("node".parse::<CeBase>(), Ok(CeBase::Node));
        assert!("edge".parse::<CeBase>().is_err());
    }

    #[test]
    fn weight_lookup_falls_back_to_category_then_default() {
        let w = Weights::default();
        assert_eq!(w.weight("Foreach"), 1.0);
        assert_eq!(w.weight("WriteRegion:collection_write_0"), 0.2);
        let mut w2 = w.clone();
        w2.table.insert("WriteRegion".into(), 0.6);
        assert_eq!(w2.weight("WriteRegion:collection_write_0"), 0.6);
    }

    #[test]
    fn ce_example() {
        let s = ce_score(0.5, 4, 0.5, 0.125);
        assert!((s - 0.5 * 4f64.ln() / 4.0).abs() < 1e-15);
        assert!((s - 0.1733).abs() < 1e-4);
        assert_eq!(ce_score(0.0, 4, 0.5, 0.125), 0.0);
        assert_eq!(ce_score(0.3, 4, 0.2, 0.2), 0.0);
    }
}
