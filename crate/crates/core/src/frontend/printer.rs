//! Pretty-printer producing source that parses back to the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_ast(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, m) in ast.methods.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_method(m, &mut out);
    }
    out
}

pub fn print_method(m: &MethodDecl, out: &mut String) {
    let params: Vec<String> = m.params.iter().map(|p| format!("${}", p.name)).collect();
    let _ = write!(out, "function {}({}) ", m.name, params.join(", "));
    print_block(&m.body, 0, out);
    out.push('\n');
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_block(b: &Block, depth: usize, out: &mut String) {
    out.push_str("{\n");
    for s in &b.stmts {
        print_stmt(s, depth + 1, out);
    }
    indent(depth, out);
    out.push('}');
}

fn print_stmt(s: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    match &s.kind {
        StmtKind::Assign { target, op, rhs } => {
            out.push_str(&expr_to_string(target.expr()));
            if *op == AssignOp::Append {
                out.push_str("[] =");
            } else {
                out.push(' ');
                out.push_str(op.symbol());
            }
            out.push(' ');
            out.push_str(&expr_to_string(rhs));
            out.push_str(";\n");
        }
        StmtKind::Foreach {
            subject,
            key,
            value,
            body,
        } => {
            let _ = write!(out, "foreach ({} as ", expr_to_string(subject));
            if let Some(k) = key {
                let _ = write!(out, "${} => ", k.name);
            }
            let _ = write!(out, "${}) ", value.name);
            print_block(body, depth, out);
            out.push('\n');
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = write!(out, "if ({}) ", expr_to_string(cond));
            print_block(then_block, depth, out);
            if let Some(e) = else_block {
                out.push_str(" else ");
                print_block(e, depth, out);
            }
            out.push('\n');
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr_to_string(e));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", expr_to_string(e));
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    print_expr(e, &mut s);
    s
}

fn print_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(v) => {
            out.push('$');
            out.push_str(v);
        }
        ExprKind::Literal(l) => match l {
            Literal::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Literal::Str(s) => {
                out.push('\'');
                for c in s.chars() {
                    if c == '\'' || c == '\\' {
                        out.push('\\');
                    }
                    out.push(c);
                }
                out.push('\'');
            }
            Literal::EmptyVec => out.push_str("vec[]"),
            Literal::EmptyDict => out.push_str("dict[]"),
        },
        ExprKind::Binary { op, lhs, rhs } => {
            print_operand(lhs, out);
            let _ = write!(out, " {} ", op.symbol());
            print_operand(rhs, out);
        }
        ExprKind::Subscript { base, index } => {
            print_operand(base, out);
            out.push('[');
            if let Some(i) = index {
                print_expr(i, out);
            }
            out.push(']');
        }
        ExprKind::PropertyGet { base, name } => {
            print_operand(base, out);
            out.push_str("->");
            out.push_str(name);
        }
        ExprKind::Call { callee, args } => {
            match callee {
                Callee::Static { class, method } => {
                    let _ = write!(out, "{class}::{method}");
                }
                Callee::Method { base, name } => {
                    print_operand(base, out);
                    out.push_str("->");
                    out.push_str(name);
                }
                Callee::Name(n) => out.push_str(n),
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::Construct { kind, args } => {
            let (open, close) = match kind {
                ConstructKind::Vec | ConstructKind::Dict => ('[', ']'),
                ConstructKind::Tuple | ConstructKind::Shape => ('(', ')'),
            };
            out.push_str(kind.keyword());
            out.push(open);
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(k) = &a.key {
                    print_expr(k, out);
                    out.push_str(" => ");
                }
                print_expr(&a.value, out);
            }
            out.push(close);
        }
    }
}

// Nested binaries are always parenthesized so precedence never matters.
fn print_operand(e: &Expr, out: &mut String) {
    if matches!(e.kind, ExprKind::Binary { .. }) {
        out.push('(');
        print_expr(e, out);
        out.push(')');
    } else {
        print_expr(e, out);
    }
}
