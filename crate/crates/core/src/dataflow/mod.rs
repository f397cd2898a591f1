//! Per-region dataflow tables (σ): write references mapped to the read
//! references they depend on.
//!
//! Labels are canonical. A write is `<type>_write_<k>` where `k` counts
//! writes of that type in the region. A read is `<type>_<k>` where `k`
//! counts first occurrences of variables of that type in textual order,
//! write targets included. Both counters restart in every control block.

mod analyze;
mod table;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::SourceSpan;
use crate::typeinfer::{TypeTable, VarType};

pub use analyze::{analyze_method, Control, RegionKind, RegionTree};
pub use table::{close_fixpoint, merge, DataflowTable, Entry};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DataflowError {
    #[error("variable `${0}` has no type entry")]
    UnknownVariable(String),
}

/// Canonical part of a reference: role, read/write and counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RefId {
    pub ty: VarType,
    pub write: bool,
    pub index: u32,
}

impl RefId {
    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Parses `collection_write_0` or `primitive_2`.
    pub fn parse(s: &str) -> Option<RefId> {
        let (head, index) = s.rsplit_once('_')?;
        let index = index.parse().ok()?;
        let (ty, write) = match head.strip_suffix("_write") {
            Some(t) => (t, true),
            None => (head, false),
        };
        let ty = VarType::ALL.into_iter().find(|v| v.as_str() == ty)?;
        Some(RefId { ty, write, index })
    }
}

impl fmt::Display for RefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.write {
            write!(f, "{}_write_{}", self.ty, self.index)
        } else {
            write!(f, "{}_{}", self.ty, self.index)
        }
    }
}

/// A canonical label paired with the variable it stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ref {
    pub id: RefId,
    pub var: String,
}

impl Ref {
    pub fn label(&self) -> String {
        self.id.label()
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.id, self.var)
    }
}

/// Numbering state of one control block.
#[derive(Clone, Debug)]
pub struct RegionContext<'t> {
    types: &'t TypeTable,
    appearances: [u32; 3],
    writes: [u32; 3],
    memo: HashMap<String, Ref>,
    order: Vec<Ref>,
}

impl<'t> RegionContext<'t> {
    pub fn new(types: &'t TypeTable) -> Self {
        RegionContext {
            types,
            appearances: [0; 3],
            writes: [0; 3],
            memo: HashMap::new(),
            order: Vec::new(),
        }
    }

    fn type_of(&self, var: &str) -> Result<VarType, DataflowError> {
        self.types
            .get(var)
            .ok_or_else(|| DataflowError::UnknownVariable(var.to_string()))
    }

    /// Records an occurrence of `var`; the first one allocates its read label.
    pub fn occur(&mut self, var: &str) -> Result<Ref, DataflowError> {
        if let Some(r) = self.memo.get(var) {
            return Ok(r.clone());
        }
        let ty = self.type_of(var)?;
        let slot = &mut self.appearances[ty.index()];
        let r = Ref {
            id: RefId {
                ty,
                write: false,
                index: *slot,
            },
            var: var.to_string(),
        };
        *slot += 1;
        self.memo.insert(var.to_string(), r.clone());
        self.order.push(r.clone());
        Ok(r)
    }

    /// Allocates a fresh write label; write counters never reuse a number.
    pub fn alloc_write(&mut self, var: &str) -> Result<Ref, DataflowError> {
        let ty = self.type_of(var)?;
        let slot = &mut self.writes[ty.index()];
        let r = Ref {
            id: RefId {
                ty,
                write: true,
                index: *slot,
            },
            var: var.to_string(),
        };
        *slot += 1;
        Ok(r)
    }

    /// Read label of `var` if it has occurred in this region.
    pub fn read_ref(&self, var: &str) -> Option<&Ref> {
        self.memo.get(var)
    }

    /// Read labels in first-occurrence order.
    pub fn appearance_order(&self) -> &[Ref] {
        &self.order
    }
}

/// `x := e`, `x := fc(..)` and the compound forms.
///
/// `target` is the written variable, `index_vars` the variables of the
/// target's subscripts (read, not written) and `rhs_vars` the right-hand side
/// variables in textual order. `reads_target` adds the target's own read
/// label, as `.=` and `+=` do.
pub fn flow_assign(
    sigma: &mut DataflowTable,
    ctx: &mut RegionContext<'_>,
    target: &str,
    reads_target: bool,
    index_vars: &[&str],
    rhs_vars: &[&str],
    span: Option<SourceSpan>,
) -> Result<Ref, DataflowError> {
    let own = ctx.occur(target)?;
    let mut reads = Vec::new();
    for v in index_vars.iter().chain(rhs_vars) {
        reads.push(ctx.occur(v)?);
    }
    if reads_target {
        reads.push(own);
    }
    let w = ctx.alloc_write(target)?;
    sigma.insert(w.clone(), reads, span);
    Ok(w)
}

/// `foreach (x as k => v)`: both `k` and `v` read the subject's variables.
pub fn flow_foreach_header(
    sigma: &mut DataflowTable,
    ctx: &mut RegionContext<'_>,
    subject_vars: &[&str],
    key: Option<&str>,
    value: &str,
    span: Option<SourceSpan>,
) -> Result<(), DataflowError> {
    let mut reads = Vec::new();
    for v in subject_vars {
        reads.push(ctx.occur(v)?);
    }
    if let Some(k) = key {
        ctx.occur(k)?;
    }
    ctx.occur(value)?;
    if let Some(k) = key {
        let w = ctx.alloc_write(k)?;
        sigma.insert(w, reads.clone(), span.clone());
    }
    let w = ctx.alloc_write(value)?;
    sigma.insert(w, reads, span);
    Ok(())
}
