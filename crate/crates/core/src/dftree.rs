//! Labeled trees consumed by the miner.
//!
//! In dataflow mode a method becomes its control skeleton with every block's
//! straight-line code replaced by a `Region` of canonical write/read labels:
//!
//! ```text
//! Method | Foreach | Then | Else  -> Region Controls
//! Else                             -> End            (no else branch)
//! If                               -> Then Else
//! Controls                         -> (Foreach | If) Controls | End
//! Region                           -> PrimitiveWriteList CollectionWriteList ObjectWriteList
//! <T>WriteList                     -> WriteRegion:<id> <T>WriteList | End
//! WriteRegion:<id>                 -> ReadRegion:<id> | End
//! ReadRegion:<id>                  -> ReadRegion:<id> | End
//! ```
//!
//! Variable names never appear in labels; they ride along in `var`.
//! Plain mode trees come from [`crate::frontend::ast_to_plain_tree`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataflow::{analyze_method, Control, DataflowError, DataflowTable, RefId, RegionTree};
use crate::frontend::{Ast, MethodDecl, SourceSpan};
use crate::typeinfer::{infer_types_with, InferOptions, TypeTable, VarType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    Dataflow,
    Plain,
}

impl TreeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeMode::Dataflow => "dataflow",
            TreeMode::Plain => "plain",
        }
    }
}

impl fmt::Display for TreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TreeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dataflow" => Ok(TreeMode::Dataflow),
            "plain" => Ok(TreeMode::Plain),
            _ => Err(format!("unknown mode `{s}` (expected dataflow or plain)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    /// Mining symbol, e.g. `WriteRegion:collection_write_0`.
    pub label: String,
    /// Label category, e.g. `WriteRegion`.
    pub nonterminal: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
    /// `[start_line, start_col, end_line, end_col]` in the tree's file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<[u32; 4]>,
    /// Concrete variable behind a reference label; reporting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
}

impl Node {
    pub fn new(label: impl Into<String>, children: Vec<Node>) -> Node {
        let label = label.into();
        let nonterminal = label.split(':').next().unwrap_or_default().to_string();
        Node {
            label,
            nonterminal,
            children,
            span: None,
            var: None,
        }
    }

    pub fn leaf(label: impl Into<String>) -> Node {
        Node::new(label, Vec::new())
    }

    pub fn with_span(mut self, span: &SourceSpan) -> Node {
        self.span = Some(span.as_array());
        self
    }

    pub fn with_var(mut self, var: &str) -> Node {
        self.var = Some(var.to_string());
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Same tree with side data (spans, variable names) removed.
    pub fn shape(&self) -> Node {
        Node {
            label: self.label.clone(),
            nonterminal: self.nonterminal.clone(),
            children: self.children.iter().map(Node::shape).collect(),
            span: None,
            var: None,
        }
    }
}

/// One method's tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfTree {
    pub mode: TreeMode,
    pub file: String,
    pub method: String,
    pub root: Node,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DfTreeError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus mixes {0} and {1} trees")]
    MixedModes(TreeMode, TreeMode),
    #[error("malformed tree at `{label}`: {message}")]
    Malformed { label: String, message: String },
}

pub const END: &str = "End";

const LISTS: [(VarType, &str); 3] = [
    (VarType::Primitive, "PrimitiveWriteList"),
    (VarType::Collection, "CollectionWriteList"),
    (VarType::Object, "ObjectWriteList"),
];

/// Lowers the region tree of `method` into its dataflow-mode tree.
pub fn build_df_tree(method: &MethodDecl, _types: &TypeTable, regions: &RegionTree) -> DfTree {
    let span = &method.span;
    DfTree {
        mode: TreeMode::Dataflow,
        file: span.file.to_string(),
        method: method.name.clone(),
        root: block("Method", regions, span),
    }
}

fn block(label: &str, r: &RegionTree, span: &SourceSpan) -> Node {
    Node::new(label, vec![region(&r.table, &r.span), controls(&r.controls, &r.span)]).with_span(span)
}

fn region(t: &DataflowTable, span: &SourceSpan) -> Node {
    let lists = LISTS
        .iter()
        .map(|&(ty, name)| {
            let rows: Vec<_> = t.entries.iter().filter(|e| e.write.id.ty == ty).collect();
            let mut list = Node::new(name, vec![Node::leaf(END).with_span(span)]).with_span(span);
            for e in rows.iter().rev() {
                let wspan = e.span.as_ref().unwrap_or(span);
                let w = Node::new(format!("WriteRegion:{}", e.write.label()), vec![read_chain(t, e, wspan)])
                    .with_span(wspan)
                    .with_var(&e.write.var);
                list = Node::new(name, vec![w, list]).with_span(span);
            }
            list
        })
        .collect();
    Node::new("Region", lists).with_span(span)
}

/// Reads in the order their variables first occur in the region.
fn read_chain(t: &DataflowTable, e: &crate::dataflow::Entry, span: &SourceSpan) -> Node {
    let pos = |id: &RefId| {
        t.appearances
            .iter()
            .position(|a| a.id == *id)
            .unwrap_or(usize::MAX)
    };
    let mut reads: Vec<_> = e.reads.iter().collect();
    reads.sort_by_key(|r| (pos(&r.id), r.id));
    let mut chain = Node::leaf(END).with_span(span);
    for r in reads.into_iter().rev() {
        chain = Node::new(format!("ReadRegion:{}", r.label()), vec![chain])
            .with_span(span)
            .with_var(&r.var);
    }
    chain
}

fn controls(cs: &[Control], span: &SourceSpan) -> Node {
    let mut list = Node::new("Controls", vec![Node::leaf(END).with_span(span)]).with_span(span);
    for c in cs.iter().rev() {
        let node = match c {
            Control::Foreach { span, body } => block("Foreach", body, span),
            Control::If {
                span,
                then_region,
                else_region,
            } => {
                let then_node = block("Then", then_region, &then_region.span);
                let else_node = match else_region {
                    Some(e) => block("Else", e, &e.span),
                    None => Node::new("Else", vec![Node::leaf(END).with_span(span)]).with_span(span),
                };
                Node::new("If", vec![then_node, else_node]).with_span(span)
            }
        };
        list = Node::new("Controls", vec![node, list]).with_span(span);
    }
    list
}

/// Full pipeline for one method: types, tables, tree.
pub fn method_df_tree(method: &MethodDecl, opts: InferOptions) -> Result<DfTree, DataflowError> {
    let types = infer_types_with(method, opts);
    let regions = analyze_method(method, &types)?;
    Ok(build_df_tree(method, &types, &regions))
}

/// One tree per method of `ast`, in declaration order.
pub fn ast_trees(ast: &Ast, mode: TreeMode, opts: InferOptions) -> Result<Vec<DfTree>, DataflowError> {
    match mode {
        TreeMode::Plain => Ok(crate::frontend::ast_to_plain_tree(ast)),
        TreeMode::Dataflow => ast.methods.iter().map(|m| method_df_tree(m, opts)).collect(),
    }
}

/// Checks a dataflow-mode tree against the grammar above.
pub fn validate(tree: &DfTree) -> Result<(), DfTreeError> {
    if tree.mode != TreeMode::Dataflow {
        return Ok(());
    }
    if tree.root.label != "Method" {
        return Err(malformed(&tree.root, "root must be Method"));
    }
    check(&tree.root)
}

fn malformed(n: &Node, message: &str) -> DfTreeError {
    DfTreeError::Malformed {
        label: n.label.clone(),
        message: message.to_string(),
    }
}

fn labels(n: &Node) -> Vec<&str> {
    n.children.iter().map(|c| c.nonterminal.as_str()).collect()
}

fn is_end(n: &Node) -> bool {
    n.label == END && n.children.is_empty()
}

fn check(n: &Node) -> Result<(), DfTreeError> {
    let kids = labels(n);
    let ok = match n.nonterminal.as_str() {
        "Method" | "Foreach" | "Then" => kids == ["Region", "Controls"],
        "Else" => kids == ["Region", "Controls"] || (kids == [END]),
        "If" => kids == ["Then", "Else"],
        "Controls" => kids == [END] || (kids.len() == 2 && matches!(kids[0], "Foreach" | "If") && kids[1] == "Controls"),
        "Region" => kids == ["PrimitiveWriteList", "CollectionWriteList", "ObjectWriteList"],
        "PrimitiveWriteList" | "CollectionWriteList" | "ObjectWriteList" => {
            let ty = LISTS.iter().find(|(_, l)| *l == n.nonterminal).map(|(t, _)| *t);
            let typed = |c: &Node| {
                c.label
                    .strip_prefix("WriteRegion:")
                    .and_then(RefId::parse)
                    .is_some_and(|id| id.write && Some(id.ty) == ty)
            };
            kids == [END] || (kids.len() == 2 && typed(&n.children[0]) && kids[1] == n.nonterminal)
        }
        "WriteRegion" | "ReadRegion" => {
            let id_ok = n
                .label
                .split_once(':')
                .and_then(|(_, id)| RefId::parse(id))
                .is_some_and(|id| id.write == (n.nonterminal == "WriteRegion"));
            id_ok && n.children.len() == 1 && matches!(kids[0], "ReadRegion" | END)
        }
        END => n.children.is_empty(),
        _ => false,
    };
    if !ok {
        return Err(malformed(n, &format!("unexpected children {kids:?}")));
    }
    if n.children.iter().any(|c| c.nonterminal == END && !is_end(c)) {
        return Err(malformed(n, "End must be a leaf"));
    }
    n.children.iter().try_for_each(check)
}

/// Maximum-likelihood pCFG over parent-to-children events.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GrammarSignature {
    pub nonterminals: BTreeSet<String>,
    pub productions: Vec<Production>,
    #[serde(skip)]
    index: BTreeMap<(String, Vec<String>), usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub count: u64,
    pub prob: f64,
}

impl GrammarSignature {
    pub fn prob(&self, lhs: &str, rhs: &[String]) -> Option<f64> {
        self.index
            .get(&(lhs.to_string(), rhs.to_vec()))
            .map(|&i| self.productions[i].prob)
    }

    /// Production probability of an internal corpus node.
    pub fn node_prob(&self, n: &Node) -> Option<f64> {
        let rhs: Vec<String> = n.children.iter().map(|c| c.label.clone()).collect();
        self.prob(&n.label, &rhs)
    }

    fn reindex(&mut self) {
        self.index = self
            .productions
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.lhs.clone(), p.rhs.clone()), i))
            .collect();
    }

    /// Rebuilds the lookup index after deserialization.
    pub fn from_productions(productions: Vec<Production>) -> Self {
        let nonterminals = productions.iter().map(|p| p.lhs.clone()).collect();
        let mut g = GrammarSignature {
            nonterminals,
            productions,
            index: BTreeMap::new(),
        };
        g.reindex();
        g
    }
}

/// Checks that all trees share one mode and returns it.
pub fn corpus_mode(corpus: &[DfTree]) -> Result<TreeMode, DfTreeError> {
    let first = corpus.first().ok_or(DfTreeError::EmptyCorpus)?.mode;
    match corpus.iter().find(|t| t.mode != first) {
        Some(t) => Err(DfTreeError::MixedModes(first, t.mode)),
        None => Ok(first),
    }
}

pub fn extract_pcfg(corpus: &[DfTree]) -> Result<GrammarSignature, DfTreeError> {
    corpus_mode(corpus)?;
    let mut counts: BTreeMap<(String, Vec<String>), u64> = BTreeMap::new();
    for t in corpus {
        t.root.walk(&mut |n| {
            if !n.is_leaf() {
                let rhs = n.children.iter().map(|c| c.label.clone()).collect();
                *counts.entry((n.label.clone(), rhs)).or_default() += 1;
            }
        });
    }
    let mut per_lhs: BTreeMap<&str, u64> = BTreeMap::new();
    for ((lhs, _), c) in &counts {
        *per_lhs.entry(lhs).or_default() += c;
    }
    let productions = counts
        .iter()
        .map(|((lhs, rhs), &count)| Production {
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            count,
            prob: count as f64 / per_lhs[lhs.as_str()] as f64,
        })
        .collect();
    Ok(GrammarSignature::from_productions(productions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(root: Node) -> DfTree {
        DfTree {
            mode: TreeMode::Plain,
            file: "t".into(),
            method: "m".into(),
            root,
        }
    }

    #[test]
    fn single_production_has_probability_one() {
        let t = tree(Node::new("A", vec![Node::leaf("B"), Node::leaf("C")]));
        let g = extract_pcfg(&[t]).unwrap();
        assert_eq!(g.prob("A", &["B".into(), "C".into()]), Some(1.0));
    }

    #[test]
    fn frequencies_split_per_lhs() {
        let bc = || Node::new("A", vec![Node::leaf("B"), Node::leaf("C")]);
        let d = Node::new("A", vec![Node::leaf("D")]);
        let g = extract_pcfg(&[tree(bc()), tree(bc()), tree(d)]).unwrap();
        assert!((g.prob("A", &["B".into(), "C".into()]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.prob("A", &["D".into()]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert_eq!(extract_pcfg(&[]), Err(DfTreeError::EmptyCorpus));
    }

    #[test]
    fn mixed_modes_are_rejected() {
        let mut a = tree(Node::leaf("A"));
        let b = a.clone();
        a.mode = TreeMode::Dataflow;
        assert!(matches!(extract_pcfg(&[a, b]), Err(DfTreeError::MixedModes(..))));
    }
}
