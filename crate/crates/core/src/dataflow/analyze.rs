use serde_json::{json, Value};

use super::table::{close_fixpoint, merge, DataflowTable};
use super::{flow_assign, flow_foreach_header, DataflowError, RegionContext};
use crate::frontend::{Block, Expr, Ident, MethodDecl, SourceSpan, StmtKind};
use crate::typeinfer::TypeTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Method,
    Foreach,
    Then,
    Else,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Method => "Method",
            RegionKind::Foreach => "Foreach",
            RegionKind::Then => "Then",
            RegionKind::Else => "Else",
        }
    }
}

/// A control block with its closed table and nested control statements.
#[derive(Clone, Debug)]
pub struct RegionTree {
    pub kind: RegionKind,
    /// Span of the block (for a method, of the whole declaration).
    pub span: SourceSpan,
    pub table: DataflowTable,
    pub controls: Vec<Control>,
}

#[derive(Clone, Debug)]
pub enum Control {
    Foreach {
        span: SourceSpan,
        body: RegionTree,
    },
    If {
        span: SourceSpan,
        then_region: RegionTree,
        else_region: Option<RegionTree>,
    },
}

impl RegionTree {
    /// Pre-order walk over this region and every nested one.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a RegionTree)) {
        f(self);
        for c in &self.controls {
            match c {
                Control::Foreach { body, .. } => body.walk(f),
                Control::If {
                    then_region,
                    else_region,
                    ..
                } => {
                    then_region.walk(f);
                    if let Some(e) = else_region {
                        e.walk(f);
                    }
                }
            }
        }
    }

    /// `--emit sigma-json` entries, one per control block in pre-order.
    pub fn to_json(&self) -> Value {
        let mut out = Vec::new();
        self.walk(&mut |r| {
            let mut v = r.table.to_json();
            v["region"] = r.kind.as_str().into();
            v["node_span"] = json!(r.span.as_array());
            out.push(v);
        });
        Value::Array(out)
    }
}

type Header<'a> = (&'a Expr, Option<&'a Ident>, &'a Ident, &'a SourceSpan);

/// Tables for every control block of `method`, children merged bottom-up.
pub fn analyze_method(method: &MethodDecl, types: &TypeTable) -> Result<RegionTree, DataflowError> {
    region(&method.body, RegionKind::Method, method.span.clone(), None, types)
}

fn region(
    block: &Block,
    kind: RegionKind,
    span: SourceSpan,
    header: Option<Header<'_>>,
    types: &TypeTable,
) -> Result<RegionTree, DataflowError> {
    let mut ctx = RegionContext::new(types);
    let mut sigma = DataflowTable::new();
    if let Some((subject, key, value, span)) = header {
        flow_foreach_header(
            &mut sigma,
            &mut ctx,
            &subject.vars(),
            key.map(|k| k.name.as_str()),
            &value.name,
            Some(span.clone()),
        )?;
    }

    for s in &block.stmts {
        match &s.kind {
            StmtKind::Assign { target, op, rhs } => {
                let target_vars = target.expr().vars();
                let rhs_vars = rhs.vars();
                match target.base_var() {
                    Some(base) => {
                        flow_assign(
                            &mut sigma,
                            &mut ctx,
                            base,
                            op.reads_target(),
                            &target_vars[1..],
                            &rhs_vars,
                            Some(s.span.clone()),
                        )?;
                    }
                    // `f()->x = ..` writes no variable.
                    None => {
                        for v in target_vars.iter().chain(&rhs_vars) {
                            ctx.occur(v)?;
                        }
                    }
                }
            }
            StmtKind::If { cond, .. } => {
                for v in cond.vars() {
                    ctx.occur(v)?;
                }
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) => {
                for v in e.vars() {
                    ctx.occur(v)?;
                }
            }
            StmtKind::Return(None) | StmtKind::Foreach { .. } => {}
        }
    }

    let mut controls = Vec::new();
    for s in block.stmts.iter().filter(|s| s.is_control()) {
        match &s.kind {
            StmtKind::Foreach {
                subject,
                key,
                value,
                body,
            } => {
                let header = (subject, key.as_ref(), value, &s.span);
                let inner = region(body, RegionKind::Foreach, body.span.clone(), Some(header), types)?;
                sigma = merge(&sigma, &inner.table, &ctx);
                controls.push(Control::Foreach {
                    span: s.span.clone(),
                    body: inner,
                });
            }
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let then_region = region(then_block, RegionKind::Then, then_block.span.clone(), None, types)?;
                sigma = merge(&sigma, &then_region.table, &ctx);
                let else_region = match else_block {
                    Some(b) => {
                        let r = region(b, RegionKind::Else, b.span.clone(), None, types)?;
                        sigma = merge(&sigma, &r.table, &ctx);
                        Some(r)
                    }
                    None => None,
                };
                controls.push(Control::If {
                    span: s.span.clone(),
                    then_region,
                    else_region,
                });
            }
            _ => unreachable!("filtered to control statements"),
        }
    }

    Ok(RegionTree {
        kind,
        span,
        table: close_fixpoint(&sigma).with_appearances(&ctx),
        controls,
    })
}
