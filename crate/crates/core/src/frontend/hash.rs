//! Span-free structural digests of methods.
//!
//! Each node hashes its kind tag, its identifier names and its children's
//! digests (post-order, Merkle style). FNV-1a keeps the result identical
//! across processes and platforms.

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MethodHash {
    pub method: String,
    pub digest: u64,
}

pub fn hash_methods(ast: &Ast) -> Vec<MethodHash> {
    ast.methods
        .iter()
        .map(|m| MethodHash {
            method: m.name.clone(),
            digest: method_digest(m),
        })
        .collect()
}

pub fn method_digest(m: &MethodDecl) -> u64 {
    let mut h = Node::new("method");
    h.text(&m.name);
    for p in &m.params {
        h.text(&p.name);
    }
    h.child(block(&m.body));
    h.finish()
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Node(u64);

impl Node {
    fn new(tag: &str) -> Node {
        let mut n = Node(FNV_OFFSET);
        n.text(tag);
        n
    }

    fn bytes(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    // Length-prefixed so adjacent fields cannot alias.
    fn text(&mut self, s: &str) {
        self.bytes(&(s.len() as u64).to_le_bytes());
        self.bytes(s.as_bytes());
    }

    fn child(&mut self, digest: u64) {
        self.bytes(&digest.to_le_bytes());
    }

    fn finish(self) -> u64 {
        self.0
    }
}

fn block(b: &Block) -> u64 {
    let mut h = Node::new("block");
    h.child(b.stmts.len() as u64);
    for s in &b.stmts {
        h.child(stmt(s));
    }
    h.finish()
}

fn stmt(s: &Stmt) -> u64 {
    match &s.kind {
        StmtKind::Assign { target, op, rhs } => {
            let mut h = Node::new("assign");
            h.text(op.symbol());
            h.child(expr(target.expr()));
            h.child(expr(rhs));
            h.finish()
        }
        StmtKind::Foreach {
            subject,
            key,
            value,
            body,
        } => {
            let mut h = Node::new("foreach");
            h.child(expr(subject));
            match key {
                Some(k) => h.text(&k.name),
                None => h.text("<nokey>"),
            }
            h.text(&value.name);
            h.child(block(body));
            h.finish()
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let mut h = Node::new("if");
            h.child(expr(cond));
            h.child(block(then_block));
            if let Some(e) = else_block {
                h.child(block(e));
            }
            h.finish()
        }
        StmtKind::Return(e) => {
            let mut h = Node::new("return");
            if let Some(e) = e {
                h.child(expr(e));
            }
            h.finish()
        }
        StmtKind::Expr(e) => {
            let mut h = Node::new("expr");
            h.child(expr(e));
            h.finish()
        }
    }
}

fn expr(e: &Expr) -> u64 {
    match &e.kind {
        ExprKind::Var(v) => {
            let mut h = Node::new("var");
            h.text(v);
            h.finish()
        }
        ExprKind::Literal(l) => {
            let mut h = Node::new("lit");
            match l {
                Literal::Int(i) => {
                    h.text("int");
                    h.bytes(&i.to_le_bytes());
                }
                Literal::Str(s) => {
                    h.text("str");
                    h.text(s);
                }
                Literal::EmptyVec => h.text("vec[]"),
                Literal::EmptyDict => h.text("dict[]"),
            }
            h.finish()
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let mut h = Node::new("binary");
            h.text(op.symbol());
            h.child(expr(lhs));
            h.child(expr(rhs));
            h.finish()
        }
        ExprKind::Subscript { base, index } => {
            let mut h = Node::new("subscript");
            h.child(expr(base));
            if let Some(i) = index {
                h.child(expr(i));
            }
            h.finish()
        }
        ExprKind::PropertyGet { base, name } => {
            let mut h = Node::new("prop");
            h.child(expr(base));
            h.text(name);
            h.finish()
        }
        ExprKind::Call { callee, args } => {
            let mut h = Node::new("call");
            match callee {
                Callee::Static { class, method } => {
                    h.text("static");
                    h.text(class);
                    h.text(method);
                }
                Callee::Method { base, name } => {
                    h.text("method");
                    h.child(expr(base));
                    h.text(name);
                }
                Callee::Name(n) => {
                    h.text("name");
                    h.text(n);
                }
            }
            h.child(args.len() as u64);
            for a in args {
                h.child(expr(a));
            }
            h.finish()
        }
        ExprKind::Construct { kind, args } => {
            let mut h = Node::new("construct");
            h.text(kind.keyword());
            h.child(args.len() as u64);
            for a in args {
                match &a.key {
                    Some(k) => h.child(expr(k)),
                    None => h.text("<nokey>"),
                }
                h.child(expr(&a.value));
            }
            h.finish()
        }
    }
}
