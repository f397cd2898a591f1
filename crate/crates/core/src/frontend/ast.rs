//! Syntax tree for MiniHack, the imperative subset of Hack this crate mines.
//!
//! Every node carries a [`SourceSpan`]. Spans are 1-based, and `end` points at
//! the column just past the last character of the node.

use std::fmt;
use std::sync::Arc;

/// A source region in a single file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, start: (u32, u32), end: (u32, u32)) -> Self {
        debug_assert!(start <= end, "span start after end");
        SourceSpan {
            file,
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    pub fn start(&self) -> (u32, u32) {
        (self.start_line, self.start_col)
    }

    pub fn end(&self) -> (u32, u32) {
        (self.end_line, self.end_col)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan::new(
            self.file.clone(),
            self.start().min(other.start()),
            self.end().max(other.end()),
        )
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.start() <= other.start() && other.end() <= self.end()
    }

    /// `[start_line, start_col, end_line, end_col]`, the JSON form.
    pub fn as_array(&self) -> [u32; 4] {
        [self.start_line, self.start_col, self.end_line, self.end_col]
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}-{}:{}",
            self.file, self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

/// One parsed `.mh` compilation unit.
#[derive(Clone, Debug)]
pub struct Ast {
    pub file: Arc<str>,
    pub methods: Vec<MethodDecl>,
}

#[derive(Clone, Debug)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Ident>,
    pub body: Block,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub enum StmtKind {
    Assign {
        target: LValue,
        op: AssignOp,
        rhs: Expr,
    },
    Foreach {
        subject: Expr,
        key: Option<Ident>,
        value: Ident,
        body: Block,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    Return(Option<Expr>),
    Expr(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssignOp {
    /// `=`
    Set,
    /// `.=`
    Concat,
    /// `+=`
    Add,
    /// `$a[] = e`
    Append,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Concat => ".=",
            AssignOp::Add => "+=",
            AssignOp::Append => "[]=",
        }
    }

    /// Compound operators read the target's previous value.
    pub fn reads_target(self) -> bool {
        matches!(self, AssignOp::Concat | AssignOp::Add)
    }
}

/// An assignable expression: a variable, a subscript or a property access.
#[derive(Clone, Debug)]
pub struct LValue(Expr);

impl LValue {
    /// Wraps `expr` if it is a valid assignment target.
    pub fn new(expr: Expr) -> Option<LValue> {
        match &expr.kind {
            ExprKind::Var(_)
            | ExprKind::Subscript { .. }
            | ExprKind::PropertyGet { .. } => Some(LValue(expr)),
            _ => None,
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }

    /// The variable ultimately written: `$a` for `$a`, `$a[$i]` and `$a->f`.
    pub fn base_var(&self) -> Option<&str> {
        let mut e = &self.0;
        loop {
            match &e.kind {
                ExprKind::Var(name) => return Some(name),
                ExprKind::Subscript { base, .. } | ExprKind::PropertyGet { base, .. } => e = base,
                _ => return None,
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Var(String),
    Literal(Literal),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Subscript {
        base: Box<Expr>,
        index: Option<Box<Expr>>,
    },
    PropertyGet {
        base: Box<Expr>,
        name: String,
    },
    Call {
        callee: Callee,
        args: Vec<Expr>,
    },
    Construct {
        kind: ConstructKind,
        args: Vec<ConstructArg>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(i64),
    Str(String),
    EmptyVec,
    EmptyDict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Concat => ".",
            BinOp::Eq => "===",
            BinOp::Ne => "!==",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub | BinOp::Concat => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Callee {
    /// `Class::method`, including `self::method`.
    Static { class: String, method: String },
    /// `$base->method`
    Method { base: Box<Expr>, name: String },
    /// A free function, possibly namespaced: `Vec\map`.
    Name(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstructKind {
    Tuple,
    Shape,
    Vec,
    Dict,
}

impl ConstructKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstructKind::Tuple => "tuple",
            ConstructKind::Shape => "shape",
            ConstructKind::Vec => "vec",
            ConstructKind::Dict => "dict",
        }
    }
}

/// One element of a constructor; shapes and dicts use `key => value`.
#[derive(Clone, Debug)]
pub struct ConstructArg {
    pub key: Option<Expr>,
    pub value: Expr,
}

impl Expr {
    /// Variables in textual (left-to-right) order, with repetitions.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Var(name) => out.push(name),
            ExprKind::Literal(_) => {}
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            ExprKind::Subscript { base, index } => {
                base.collect_vars(out);
                if let Some(index) = index {
                    index.collect_vars(out);
                }
            }
            ExprKind::PropertyGet { base, .. } => base.collect_vars(out),
            ExprKind::Call { callee, args } => {
                if let Callee::Method { base, .. } = callee {
                    base.collect_vars(out);
                }
                for a in args {
                    a.collect_vars(out);
                }
            }
            ExprKind::Construct { args, .. } => {
                for a in args {
                    if let Some(k) = &a.key {
                        k.collect_vars(out);
                    }
                    a.value.collect_vars(out);
                }
            }
        }
    }
}

impl Stmt {
    pub fn is_control(&self) -> bool {
        matches!(self.kind, StmtKind::Foreach { .. } | StmtKind::If { .. })
    }
}
