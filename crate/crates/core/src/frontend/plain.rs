//! Plain-mode trees: the raw syntax tree with every identifier replaced by
//! `VAR` and every literal by `LIT`. Parameters are not part of the tree.

use super::ast::*;
use crate::dftree::{DfTree, Node, TreeMode};

pub fn ast_to_plain_tree(ast: &Ast) -> Vec<DfTree> {
    ast.methods.iter().map(method_to_plain_tree).collect()
}

pub fn method_to_plain_tree(m: &MethodDecl) -> DfTree {
    DfTree {
        mode: TreeMode::Plain,
        file: m.span.file.to_string(),
        method: m.name.clone(),
        root: Node::new("Method", vec![block(&m.body)]).with_span(&m.span),
    }
}

fn var(span: &SourceSpan) -> Node {
    Node::leaf("VAR").with_span(span)
}

fn block(b: &Block) -> Node {
    Node::new("Block", b.stmts.iter().map(stmt).collect()).with_span(&b.span)
}

fn stmt(s: &Stmt) -> Node {
    let (label, children) = match &s.kind {
        StmtKind::Assign { target, op, rhs } => (
            format!("Assign:{}", op.symbol()),
            vec![expr(target.expr()), expr(rhs)],
        ),
        StmtKind::Foreach {
            subject,
            key,
            value,
            body,
        } => {
            let mut c = vec![expr(subject)];
            if let Some(k) = key {
                c.push(var(&k.span));
            }
            c.push(var(&value.span));
            c.push(block(body));
            ("Foreach".to_string(), c)
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let mut c = vec![expr(cond), block(then_block)];
            if let Some(e) = else_block {
                c.push(block(e));
            }
            ("If".to_string(), c)
        }
        StmtKind::Return(e) => ("Return".to_string(), e.iter().map(expr).collect()),
        StmtKind::Expr(e) => ("ExprStmt".to_string(), vec![expr(e)]),
    };
    Node::new(label, children).with_span(&s.span)
}

fn expr(e: &Expr) -> Node {
    let (label, children) = match &e.kind {
        ExprKind::Var(_) => return var(&e.span),
        ExprKind::Literal(_) => return Node::leaf("LIT").with_span(&e.span),
        ExprKind::Binary { op, lhs, rhs } => (format!("Binary:{}", op.symbol()), vec![expr(lhs), expr(rhs)]),
        ExprKind::Subscript { base, index } => {
            let mut c = vec![expr(base)];
            c.extend(index.as_deref().map(expr));
            ("Subscript".to_string(), c)
        }
        ExprKind::PropertyGet { base, .. } => ("PropertyGet".to_string(), vec![expr(base), var(&e.span)]),
        ExprKind::Call { callee, args } => {
            let (label, mut c) = match callee {
                Callee::Static { .. } => ("Call:static", vec![var(&e.span), var(&e.span)]),
                Callee::Method { base, .. } => ("Call:method", vec![expr(base), var(&e.span)]),
                Callee::Name(_) => ("Call:name", vec![var(&e.span)]),
            };
            c.extend(args.iter().map(expr));
            (label.to_string(), c)
        }
        ExprKind::Construct { kind, args } => {
            let c = args
                .iter()
                .map(|a| match &a.key {
                    Some(k) => Node::new("KeyValue", vec![expr(k), expr(&a.value)]).with_span(&k.span.to(&a.value.span)),
                    None => expr(&a.value),
                })
                .collect();
            (format!("Construct:{}", kind.keyword()), c)
        }
    };
    Node::new(label, children).with_span(&e.span)
}
