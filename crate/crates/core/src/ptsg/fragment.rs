use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dftree::{GrammarSignature, Node};

/// A tree fragment. Frontier nodes stand for any subtree with that root label;
/// every other node is expanded exactly as in the corpus (a node with no
/// children is a corpus leaf).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FragNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub frontier: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<FragNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fragment {
    pub root: FragNode,
}

impl FragNode {
    pub fn internal(label: impl Into<String>, children: Vec<FragNode>) -> FragNode {
        FragNode {
            label: label.into(),
            frontier: false,
            children,
        }
    }

    pub fn frontier(label: impl Into<String>) -> FragNode {
        FragNode {
            label: label.into(),
            frontier: true,
            children: Vec::new(),
        }
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a FragNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    fn write(&self, out: &mut String) {
        if self.frontier {
            out.push_str(&self.label);
            return;
        }
        out.push('(');
        out.push_str(&self.label);
        for c in &self.children {
            out.push(' ');
            c.write(out);
        }
        out.push(')');
    }
}

impl Fragment {
    pub fn new(root: FragNode) -> Fragment {
        Fragment { root }
    }

    /// The whole of `node` as a fragment with no frontier.
    pub fn from_tree(node: &Node) -> Fragment {
        fn go(n: &Node) -> FragNode {
            FragNode::internal(n.label.clone(), n.children.iter().map(go).collect())
        }
        Fragment::new(go(node))
    }

    /// `node` cut at `depth` levels; deeper nodes become frontier nodes.
    pub fn prefix(node: &Node, depth: usize) -> Fragment {
        fn go(n: &Node, depth: usize) -> FragNode {
            if depth == 0 && !n.is_leaf() {
                FragNode::frontier(n.label.clone())
            } else {
                FragNode::internal(n.label.clone(), n.children.iter().map(|c| go(c, depth.saturating_sub(1))).collect())
            }
        }
        Fragment::new(go(node, depth))
    }

    pub fn root_label(&self) -> &str {
        &self.root.label
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |_| n += 1);
        n
    }

    pub fn frontier_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |f| n += usize::from(f.frontier));
        n
    }

    /// Nodes the fragment fixes completely (everything but the frontier).
    pub fn internal_count(&self) -> usize {
        self.size() - self.frontier_count()
    }

    /// Canonical text form: `(Label child ..)` for expanded nodes, a bare
    /// label for frontier nodes.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        self.root.write(&mut s);
        s
    }

    /// Every parent-to-children production inside the fragment.
    pub fn productions(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        self.root.walk(&mut |n| {
            if !n.frontier && !n.children.is_empty() {
                out.push((n.label.clone(), n.children.iter().map(|c| c.label.clone()).collect()));
            }
        });
        out
    }

    /// log P0 under `pcfg`, or the first production it does not know.
    pub fn log_base_measure(&self, pcfg: &GrammarSignature) -> Result<f64, (String, Vec<String>)> {
        let mut lp = 0.0;
        for (lhs, rhs) in self.productions() {
            match pcfg.prob(&lhs, &rhs) {
                Some(p) => lp += p.ln(),
                None => return Err((lhs, rhs)),
            }
        }
        Ok(lp)
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_distinguishes_frontier_from_leaf() {
        let a = Fragment::new(FragNode::internal("A", vec![FragNode::internal("End", vec![])]));
        let b = Fragment::new(FragNode::internal("A", vec![FragNode::frontier("End")]));
        assert_eq!(a.serialize(), "(A (End))");
        assert_eq!(b.serialize(), "(A End)");
        assert_eq!(a.size(), 2);
        assert_eq!(b.internal_count(), 1);
    }

    #[test]
    fn prefix_cuts_at_depth() {
        let t = Node::new("A", vec![Node::new("B", vec![Node::leaf("C")]), Node::leaf("D")]);
        assert_eq!(Fragment::prefix(&t, 1).serialize(), "(A B (D))");
        assert_eq!(Fragment::prefix(&t, 5).serialize(), "(A (B (C)) (D))");
    }
}
