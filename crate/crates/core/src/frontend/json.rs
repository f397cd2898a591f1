use serde_json::{json, Map, Value};

use super::ast::*;

/// `--emit ast-json` document for a whole compilation unit.
pub fn ast_to_json(ast: &Ast) -> Value {
    let methods: Vec<Value> = ast
        .methods
        .iter()
        .map(|m| {
            json!({
                "name": m.name,
                "params": m.params.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(),
                "span": m.span.as_array(),
                "body": block(&m.body),
            })
        })
        .collect();
    json!({ "file": &*ast.file, "methods": methods })
}

fn node(kind: &str, span: &SourceSpan) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("kind".into(), kind.into());
    m.insert("span".into(), json!(span.as_array()));
    m
}

fn block(b: &Block) -> Value {
    Value::Array(b.stmts.iter().map(stmt).collect())
}

fn stmt(s: &Stmt) -> Value {
    let mut m;
    match &s.kind {
        StmtKind::Assign { target, op, rhs } => {
            m = node("Assign", &s.span);
            m.insert("op".into(), op.symbol().into());
            m.insert("target".into(), expr(target.expr()));
            m.insert("rhs".into(), expr(rhs));
        }
        StmtKind::Foreach {
            subject,
            key,
            value,
            body,
        } => {
            m = node("Foreach", &s.span);
            m.insert("subject".into(), expr(subject));
            m.insert("key".into(), key.as_ref().map(|k| k.name.clone()).into());
            m.insert("value".into(), value.name.clone().into());
            m.insert("body".into(), block(body));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            m = node("If", &s.span);
            m.insert("cond".into(), expr(cond));
            m.insert("then".into(), block(then_block));
            m.insert("else".into(), else_block.as_ref().map(block).into());
        }
        StmtKind::Return(e) => {
            m = node("Return", &s.span);
            m.insert("value".into(), e.as_ref().map(expr).into());
        }
        StmtKind::Expr(e) => {
            m = node("ExprStmt", &s.span);
            m.insert("expr".into(), expr(e));
        }
    }
    Value::Object(m)
}

fn expr(e: &Expr) -> Value {
    let mut m;
    match &e.kind {
        ExprKind::Var(v) => {
            m = node("Var", &e.span);
            m.insert("name".into(), v.clone().into());
        }
        ExprKind::Literal(l) => {
            m = node("Literal", &e.span);
            let v = match l {
                Literal::Int(i) => json!(i),
                Literal::Str(s) => json!(s),
                Literal::EmptyVec => json!("vec[]"),
                Literal::EmptyDict => json!("dict[]"),
            };
            m.insert("value".into(), v);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            m = node("Binary", &e.span);
            m.insert("op".into(), op.symbol().into());
            m.insert("lhs".into(), expr(lhs));
            m.insert("rhs".into(), expr(rhs));
        }
        ExprKind::Subscript { base, index } => {
            m = node("Subscript", &e.span);
            m.insert("base".into(), expr(base));
            m.insert("index".into(), index.as_deref().map(expr).into());
        }
        ExprKind::PropertyGet { base, name } => {
            m = node("PropertyGet", &e.span);
            m.insert("base".into(), expr(base));
            m.insert("name".into(), name.clone().into());
        }
        ExprKind::Call { callee, args } => {
            m = node("Call", &e.span);
            let c = match callee {
                Callee::Static { class, method } => {
                    json!({"kind": "static", "class": class, "method": method})
                }
                Callee::Method { base, name } => {
                    json!({"kind": "method", "base": expr(base), "name": name})
                }
                Callee::Name(n) => json!({"kind": "name", "name": n}),
            };
            m.insert("callee".into(), c);
            m.insert("args".into(), args.iter().map(expr).collect());
        }
        ExprKind::Construct { kind, args } => {
            m = node("Construct", &e.span);
            m.insert("construct".into(), kind.keyword().into());
            let args: Vec<Value> = args
                .iter()
                .map(|a| json!({"key": a.key.as_ref().map(expr), "value": expr(&a.value)}))
                .collect();
            m.insert("args".into(), args.into());
        }
    }
    Value::Object(m)
}
