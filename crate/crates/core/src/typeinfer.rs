//! Syntactic role inference: every variable of a method is a collection, an
//! object or a primitive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::frontend::{visit_exprs, Block, Callee, Expr, ExprKind, Literal, MethodDecl, StmtKind};
use crate::frontend::{AssignOp, ConstructKind};

/// Variable role. The declaration order is the read-chain type rank used
/// when sorting references.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Collection,
    Primitive,
    Object,
}

impl VarType {
    pub const ALL: [VarType; 3] = [VarType::Collection, VarType::Primitive, VarType::Object];

    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Collection => "collection",
            VarType::Primitive => "primitive",
            VarType::Object => "object",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferOptions {
    /// Type the target of `.=` as a collection (string accumulators).
    pub accumulator_promotion: bool,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            accumulator_promotion: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTable {
    pub method: String,
    pub entries: BTreeMap<String, VarType>,
}

impl TypeTable {
    pub fn get(&self, var: &str) -> Option<VarType> {
        self.entries.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `--emit types-json` form.
    pub fn to_json(&self) -> Value {
        let types: serde_json::Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().into()))
            .collect();
        json!({ "method": self.method, "types": types })
    }
}

pub fn infer_types(method: &MethodDecl) -> TypeTable {
    infer_types_with(method, InferOptions::default())
}

pub fn infer_types_with(method: &MethodDecl, opts: InferOptions) -> TypeTable {
    let mut h = Hints::default();
    for p in &method.params {
        h.seen(&p.name);
    }
    h.block(&method.body, opts);

    let entries = h
        .all
        .into_iter()
        .map(|v| {
            let t = if v == "this" {
                VarType::Object
            } else if h.collection.contains(&v) {
                VarType::Collection
            } else if h.object.contains(&v) {
                VarType::Object
            } else {
                VarType::Primitive
            };
            (v, t)
        })
        .collect();
    TypeTable {
        method: method.name.clone(),
        entries,
    }
}

#[derive(Default)]
struct Hints {
    all: BTreeSet<String>,
    collection: BTreeSet<String>,
    object: BTreeSet<String>,
}

fn as_var(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Var(v) => Some(v),
        _ => None,
    }
}

impl Hints {
    fn seen(&mut self, v: &str) {
        self.all.insert(v.to_string());
    }

    fn block(&mut self, b: &Block, opts: InferOptions) {
        for s in &b.stmts {
            match &s.kind {
                StmtKind::Assign { target, op, rhs } => {
                    self.expr(target.expr());
                    self.expr(rhs);
                    let Some(base) = target.base_var() else {
                        continue;
                    };
                    // Only a bare variable target takes a hint from the operator;
                    // `$a[$i] = ..` already hints `$a` via the subscript and
                    // `$o->items[] = ..` says nothing about `$o`.
                    let bare = as_var(target.expr()).is_some();
                    let constructs_collection = matches!(
                        rhs.kind,
                        ExprKind::Literal(Literal::EmptyVec | Literal::EmptyDict)
                            | ExprKind::Construct {
                                kind: ConstructKind::Vec | ConstructKind::Dict,
                                ..
                            }
                    );
                    let hinted = match op {
                        AssignOp::Append => true,
                        AssignOp::Concat => opts.accumulator_promotion,
                        AssignOp::Set => constructs_collection,
                        AssignOp::Add => false,
                    };
                    if hinted && bare {
                        self.collection.insert(base.to_string());
                    }
                }
                StmtKind::Foreach {
                    subject,
                    key,
                    value,
                    body,
                } => {
                    self.expr(subject);
                    if let Some(v) = as_var(subject) {
                        self.collection.insert(v.to_string());
                    }
                    if let Some(k) = key {
                        self.seen(&k.name);
                    }
                    self.seen(&value.name);
                    self.block(body, opts);
                }
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    self.expr(cond);
                    self.block(then_block, opts);
                    if let Some(e) = else_block {
                        self.block(e, opts);
                    }
                }
                StmtKind::Return(Some(e)) | StmtKind::Expr(e) => self.expr(e),
                StmtKind::Return(None) => {}
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        visit_exprs(e, &mut |sub| match &sub.kind {
            ExprKind::Var(v) => self.seen(v),
            ExprKind::Subscript { base, .. } => {
                if let Some(v) = as_var(base) {
                    self.collection.insert(v.to_string());
                }
            }
            ExprKind::PropertyGet { base, .. }
            | ExprKind::Call {
                callee: Callee::Method { base, .. },
                ..
            } => {
                if let Some(v) = as_var(base) {
                    self.object.insert(v.to_string());
                }
            }
            _ => {}
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn types(src: &str) -> BTreeMap<String, VarType> {
        let ast = parse(src, "t.mh").unwrap();
        infer_types(&ast.methods[0]).entries
    }

    #[test]
    fn unhinted_parameter_is_primitive() {
        let t = types("function f($x) { return $x; }");
        assert_eq!(t.len(), 1);
        assert_eq!(t["x"], VarType::Primitive);
    }

    #[test]
    fn string_accumulator_is_promoted() {
        let src = "function f($outputs) { $output = ''; foreach ($outputs as $k => $v) { $output .= g($k, $v); } return $output; }";
        assert_eq!(types(src)["output"], VarType::Collection);
        let ast = parse(src, "t.mh").unwrap();
        let off = infer_types_with(
            &ast.methods[0],
            InferOptions {
                accumulator_promotion: false,
            },
        );
        assert_eq!(off.entries["output"], VarType::Primitive);
    }

    #[test]
    fn collection_beats_object() {
        let t = types("function f($a) { $x = $a->items; $y = $a[0]; }");
        assert_eq!(t["a"], VarType::Collection);
    }

    #[test]
    fn counter_increment_stays_primitive() {
        let t = types("function f($xs) { $n = 0; foreach ($xs as $x) { $n += 1; } return $n; }");
        assert_eq!(t["n"], VarType::Primitive);
        assert_eq!(t["x"], VarType::Primitive);
        assert_eq!(t["xs"], VarType::Collection);
    }

    #[test]
    fn this_is_always_an_object() {
        let t = types("function f() { $this[0] = 1; }");
        assert_eq!(t["this"], VarType::Object);
    }
}
