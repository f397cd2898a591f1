//! Recursive-descent parser for MiniHack.

use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

/// Parses one compilation unit. Either every method parses or the whole
/// file is rejected.
pub fn parse(source: &str, file: &str) -> Result<Ast, SyntaxError> {
    let file: Arc<str> = Arc::from(file);
    let tokens = tokenize(source).map_err(|e| e.in_file(&file))?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        file: file.clone(),
    };
    p.unit().map_err(|e| e.in_file(&file))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Arc<str>,
}

type PResult<T> = Result<T, SyntaxError>;

const MODIFIERS: &[&str] = &["public", "private", "protected", "static", "async", "final", "abstract"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off).map(|t| &t.tok)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(i)) if i == s)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (u32, u32) {
        match self.toks.get(self.pos) {
            Some(t) => t.start,
            None => self.toks.last().map(|t| t.end).unwrap_or((1, 1)),
        }
    }

    fn prev_end(&self) -> (u32, u32) {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.toks.get(i))
            .map(|t| t.end)
            .unwrap_or((1, 1))
    }

    fn span_from(&self, start: (u32, u32)) -> SourceSpan {
        SourceSpan::new(self.file.clone(), start, self.prev_end())
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (start, end) = match self.toks.get(self.pos) {
            Some(t) => (t.start, t.end),
            None => (self.here(), self.here()),
        };
        Err(SyntaxError::at(start, end, msg))
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{t}`"),
            None => "end of input".to_string(),
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.found()))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(format!("expected identifier, found {}", self.found())),
        }
    }

    fn expect_var(&mut self) -> PResult<Ident> {
        let start = self.here();
        match self.peek() {
            Some(Tok::Var(v)) => {
                let name = v.clone();
                self.bump();
                Ok(Ident {
                    name,
                    span: self.span_from(start),
                })
            }
            _ => self.error(format!("expected variable, found {}", self.found())),
        }
    }

    fn unit(&mut self) -> PResult<Ast> {
        let mut methods = Vec::new();
        let mut in_class = false;
        if self.is_ident("class") {
            self.bump();
            self.expect_ident()?;
            self.expect_punct("{")?;
            in_class = true;
        }
        loop {
            match self.peek() {
                None => break,
                Some(Tok::Punct("}")) if in_class => {
                    self.bump();
                    in_class = false;
                    if self.peek().is_some() {
                        return self.error("unexpected tokens after class body");
                    }
                    break;
                }
                _ => methods.push(self.method()?),
            }
        }
        if in_class {
            return self.error("unterminated class body");
        }
        Ok(Ast {
            file: self.file.clone(),
            methods,
        })
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let start = self.here();
        while matches!(self.peek(), Some(Tok::Ident(m)) if MODIFIERS.contains(&m.as_str())) {
            self.bump();
        }
        if !self.is_ident("function") {
            return self.error(format!("expected `function`, found {}", self.found()));
        }
        self.bump();
        let name = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        while !self.is_punct(")") {
            self.skip_type();
            params.push(self.expect_var()?);
            if !self.is_punct(")") {
                self.expect_punct(",")?;
            }
        }
        self.expect_punct(")")?;
        if self.is_punct(":") {
            self.bump();
            self.skip_type();
        }
        let body = self.block()?;
        Ok(MethodDecl {
            name,
            params,
            body,
            span: self.span_from(start),
        })
    }

    /// Type annotations are accepted and dropped.
    fn skip_type(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::Punct("?")) => {}
                Some(Tok::Punct("<")) => depth += 1,
                Some(Tok::Punct(">")) if depth > 0 => depth -= 1,
                Some(Tok::Punct(",")) if depth > 0 => {}
                _ => return,
            }
            self.bump();
        }
    }

    fn block(&mut self) -> PResult<Block> {
        let start = self.here();
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return self.error("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block {
            stmts,
            span: self.span_from(start),
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.here();
        let kind = if self.is_ident("foreach") {
            self.bump();
            self.expect_punct("(")?;
            let subject = self.expr()?;
            if !self.is_ident("as") {
                return self.error(format!("expected `as`, found {}", self.found()));
            }
            self.bump();
            let first = self.expect_var()?;
            let (key, value) = if self.is_punct("=>") {
                self.bump();
                (Some(first), self.expect_var()?)
            } else {
                (None, first)
            };
            self.expect_punct(")")?;
            let body = self.block()?;
            StmtKind::Foreach {
                subject,
                key,
                value,
                body,
            }
        } else if self.is_ident("if") {
            self.bump();
            return self.if_rest(start);
        } else if self.is_ident("return") {
            self.bump();
            let value = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else {
            let lhs = self.expr_allowing_append()?;
            let op = match self.peek() {
                Some(Tok::Punct("=")) => Some(AssignOp::Set),
                Some(Tok::Punct(".=")) => Some(AssignOp::Concat),
                Some(Tok::Punct("+=")) => Some(AssignOp::Add),
                _ => None,
            };
            match op {
                Some(mut op) => {
                    self.bump();
                    let mut target = lhs;
                    if let ExprKind::Subscript { index: None, .. } = &target.kind {
                        if op != AssignOp::Set {
                            return self.error("`[]` may only be combined with `=`");
                        }
                        op = AssignOp::Append;
                        let ExprKind::Subscript { base, .. } = target.kind else {
                            unreachable!()
                        };
                        target = *base;
                    }
                    check_no_empty_subscript(&target)?;
                    let Some(target) = LValue::new(target) else {
                        return self.error("assignment target must be a variable, subscript or property");
                    };
                    let rhs = self.expr()?;
                    self.expect_punct(";")?;
                    StmtKind::Assign { target, op, rhs }
                }
                None => {
                    check_no_empty_subscript(&lhs)?;
                    self.expect_punct(";")?;
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Stmt {
            kind,
            span: self.span_from(start),
        })
    }

    fn if_rest(&mut self, start: (u32, u32)) -> PResult<Stmt> {
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_block = self.block()?;
        let else_block = if self.is_ident("else") || self.is_ident("elseif") {
            let chained = self.is_ident("elseif");
            self.bump();
            if chained || self.is_ident("if") {
                // `else if` nests as an else-block holding a single if.
                let inner_start = self.here();
                if !chained {
                    self.bump();
                }
                let inner = self.if_rest(inner_start)?;
                let span = inner.span.clone();
                Some(Block {
                    stmts: vec![inner],
                    span,
                })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
            span: self.span_from(start),
        })
    }

    fn expr_allowing_append(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let e = self.binary(0)?;
        check_no_empty_subscript(&e)?;
        Ok(e)
    }

    fn binop(&self) -> Option<BinOp> {
        let Some(Tok::Punct(p)) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "." => BinOp::Concat,
            "==" | "===" => BinOp::Eq,
            "!=" | "!==" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    // Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec <= min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec)?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let start = self.here();
        let mut e = self.primary()?;
        loop {
            if self.is_punct("[") {
                self.bump();
                let index = if self.is_punct("]") {
                    None
                } else {
                    Some(Box::new(self.expr()?))
                };
                self.expect_punct("]")?;
                e = Expr {
                    kind: ExprKind::Subscript {
                        base: Box::new(e),
                        index,
                    },
                    span: self.span_from(start),
                };
            } else if self.is_punct("->") {
                self.bump();
                let name = self.expect_ident()?;
                if self.is_punct("(") {
                    let args = self.args("(", ")")?;
                    e = Expr {
                        kind: ExprKind::Call {
                            callee: Callee::Method {
                                base: Box::new(e),
                                name,
                            },
                            args,
                        },
                        span: self.span_from(start),
                    };
                } else {
                    e = Expr {
                        kind: ExprKind::PropertyGet {
                            base: Box::new(e),
                            name,
                        },
                        span: self.span_from(start),
                    };
                }
            } else {
                return Ok(e);
            }
        }
    }

    fn args(&mut self, open: &'static str, close: &'static str) -> PResult<Vec<Expr>> {
        self.expect_punct(open)?;
        let mut out = Vec::new();
        while !self.is_punct(close) {
            out.push(self.expr()?);
            if !self.is_punct(close) {
                self.expect_punct(",")?;
            }
        }
        self.bump();
        Ok(out)
    }

    fn keyed_args(&mut self, open: &'static str, close: &'static str) -> PResult<Vec<ConstructArg>> {
        self.expect_punct(open)?;
        let mut out = Vec::new();
        while !self.is_punct(close) {
            let first = self.expr()?;
            let arg = if self.is_punct("=>") {
                self.bump();
                ConstructArg {
                    key: Some(first),
                    value: self.expr()?,
                }
            } else {
                ConstructArg {
                    key: None,
                    value: first,
                }
            };
            out.push(arg);
            if !self.is_punct(close) {
                self.expect_punct(",")?;
            }
        }
        self.bump();
        Ok(out)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.here();
        let kind = match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.bump();
                ExprKind::Var(v)
            }
            Some(Tok::Int(i)) => {
                self.bump();
                ExprKind::Literal(Literal::Int(i))
            }
            Some(Tok::Punct("-")) if matches!(self.peek_at(1), Some(Tok::Int(_))) => {
                self.bump();
                let Some(Token { tok: Tok::Int(i), .. }) = self.bump() else {
                    unreachable!()
                };
                ExprKind::Literal(Literal::Int(-i))
            }
            Some(Tok::Str(s)) => {
                self.bump();
                ExprKind::Literal(Literal::Str(s))
            }
            Some(Tok::Punct("(")) => {
                self.bump();
                let inner = self.expr()?;
                self.expect_punct(")")?;
                // Parentheses only group; keep the inner node.
                return Ok(inner);
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                match name.as_str() {
                    "vec" | "dict" if self.is_punct("[") => {
                        let kind = if name == "vec" {
                            ConstructKind::Vec
                        } else {
                            ConstructKind::Dict
                        };
                        let args = self.keyed_args("[", "]")?;
                        if args.is_empty() {
                            ExprKind::Literal(if kind == ConstructKind::Vec {
                                Literal::EmptyVec
                            } else {
                                Literal::EmptyDict
                            })
                        } else {
                            ExprKind::Construct { kind, args }
                        }
                    }
                    "tuple" | "shape" if self.is_punct("(") => {
                        let kind = if name == "tuple" {
                            ConstructKind::Tuple
                        } else {
                            ConstructKind::Shape
                        };
                        ExprKind::Construct {
                            kind,
                            args: self.keyed_args("(", ")")?,
                        }
                    }
                    _ if self.is_punct("::") => {
                        self.bump();
                        let method = self.expect_ident()?;
                        let args = self.args("(", ")")?;
                        ExprKind::Call {
                            callee: Callee::Static {
                                class: name,
                                method,
                            },
                            args,
                        }
                    }
                    _ if self.is_punct("(") => {
                        let args = self.args("(", ")")?;
                        ExprKind::Call {
                            callee: Callee::Name(name),
                            args,
                        }
                    }
                    _ => {
                        self.pos -= 1;
                        return self.error(format!("unexpected identifier `{name}`"));
                    }
                }
            }
            _ => return self.error(format!("expected expression, found {}", self.found())),
        };
        Ok(Expr {
            kind,
            span: self.span_from(start),
        })
    }
}

fn check_no_empty_subscript(e: &Expr) -> PResult<()> {
    let mut err = None;
    visit_exprs(e, &mut |x| {
        if let ExprKind::Subscript { index: None, .. } = x.kind {
            if err.is_none() {
                err = Some(SyntaxError::at(
                    x.span.start(),
                    x.span.end(),
                    "empty subscript `[]` is only valid as an append target",
                ));
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Pre-order walk over an expression and all its sub-expressions.
pub fn visit_exprs<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Literal(_) => {}
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_exprs(lhs, f);
            visit_exprs(rhs, f);
        }
        ExprKind::Subscript { base, index } => {
            visit_exprs(base, f);
            if let Some(i) = index {
                visit_exprs(i, f);
            }
        }
        ExprKind::PropertyGet { base, .. } => visit_exprs(base, f),
        ExprKind::Call { callee, args } => {
            if let Callee::Method { base, .. } = callee {
                visit_exprs(base, f);
            }
            for a in args {
                visit_exprs(a, f);
            }
        }
        ExprKind::Construct { args, .. } => {
            for a in args {
                if let Some(k) = &a.key {
                    visit_exprs(k, f);
                }
                visit_exprs(&a.value, f);
            }
        }
    }
}
