use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use super::{Ref, RegionContext};
use crate::frontend::SourceSpan;

/// One row: a write and the reads it depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub write: Ref,
    /// Sorted by (type rank, appearance index).
    pub reads: BTreeSet<Ref>,
    /// The statement that performed the write.
    pub span: Option<SourceSpan>,
}

/// σ for one region. Rows are kept in write order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataflowTable {
    pub entries: Vec<Entry>,
    /// Read labels of the region in first-occurrence order.
    pub appearances: Vec<Ref>,
}

impl DataflowTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, write: Ref, reads: impl IntoIterator<Item = Ref>, span: Option<SourceSpan>) {
        debug_assert!(write.id.write);
        self.entries.push(Entry {
            write,
            reads: reads.into_iter().collect(),
            span,
        });
    }

    pub fn get(&self, write_label: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.write.label() == write_label)
    }

    /// Reads of the row whose write label is `write_label`, as (label, var) pairs.
    pub fn reads_of(&self, write_label: &str) -> Option<BTreeSet<(String, String)>> {
        self.get(write_label)
            .map(|e| e.reads.iter().map(|r| (r.label(), r.var.clone())).collect())
    }

    pub(crate) fn with_appearances(mut self, ctx: &RegionContext<'_>) -> Self {
        self.appearances = ctx.appearance_order().to_vec();
        self
    }

    /// `{"writes":[{"id","var","reads":[[id,var],..]}]}`
    pub fn to_json(&self) -> Value {
        let writes: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let reads: Vec<Value> = e.reads.iter().map(|r| json!([r.label(), r.var])).collect();
                json!({"id": e.write.label(), "var": e.write.var, "reads": reads})
            })
            .collect();
        json!({ "writes": writes })
    }
}

/// Smallest superset of `sigma` in which every write also depends on
/// everything any write to one of its read variables depends on.
///
/// All writes to a variable inside the region count, not only the latest
/// one, so loop-carried flow through a re-assigned variable is kept.
pub fn close_fixpoint(sigma: &DataflowTable) -> DataflowTable {
    let mut by_var: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in sigma.entries.iter().enumerate() {
        by_var.entry(e.write.var.as_str()).or_default().push(i);
    }
    let mut reads: Vec<BTreeSet<Ref>> = sigma.entries.iter().map(|e| e.reads.clone()).collect();
    loop {
        let mut changed = false;
        for i in 0..reads.len() {
            let mut add = BTreeSet::new();
            for r in &reads[i] {
                for &j in by_var.get(r.var.as_str()).into_iter().flatten() {
                    add.extend(reads[j].iter().filter(|x| !reads[i].contains(*x)).cloned());
                }
            }
            if !add.is_empty() {
                reads[i].extend(add);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    DataflowTable {
        entries: sigma
            .entries
            .iter()
            .zip(reads)
            .map(|(e, reads)| Entry {
                write: e.write.clone(),
                reads,
                span: e.span.clone(),
            })
            .collect(),
        appearances: sigma.appearances.clone(),
    }
}

/// ψ: folds an inner block's table into the outer one.
///
/// Outer-only rows are kept, inner-only rows are dropped. For a variable
/// written on both sides, the inner reads of variables that also occur in the
/// outer region are relabeled with their outer read labels and added to the
/// last outer write of that variable. The result is not re-closed;
/// [`analyze_method`](super::analyze_method) closes each region once all of
/// its children are merged, which gives the same table because closure is
/// monotone and idempotent.
pub fn merge(outer: &DataflowTable, inner: &DataflowTable, ctx: &RegionContext<'_>) -> DataflowTable {
    let mut out = outer.clone();
    let mut last_write: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, e) in outer.entries.iter().enumerate() {
        last_write.insert(e.write.var.as_str(), i);
    }
    for e in &inner.entries {
        let Some(&i) = last_write.get(e.write.var.as_str()) else {
            continue;
        };
        let imported = e.reads.iter().filter_map(|r| ctx.read_ref(&r.var)).cloned();
        out.entries[i].reads.extend(imported);
    }
    out
}
