//! Golden checks of the analysis stages on the motivating examples.

use std::collections::BTreeSet;

use idiom_forge::dataflow::{
    analyze_method, close_fixpoint, flow_assign, flow_foreach_header, merge, Control, DataflowTable,
    RegionContext,
};
use idiom_forge::dftree::{build_df_tree, validate, Node};
use idiom_forge::frontend::{parse, Ast, MethodDecl, StmtKind};
use idiom_forge::typeinfer::{infer_types, VarType};

fn fixture(name: &str) -> Ast {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap();
    parse(&src, name).unwrap()
}

fn method(name: &str) -> MethodDecl {
    fixture(name).methods.remove(0)
}

fn set(pairs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn call_stack_types() {
    let t = infer_types(&method("example2_imperative.mh"));
    let expected = [
        ("call_stack_nodes", VarType::Collection),
        ("identifier_to_id", VarType::Collection),
        ("identifier", VarType::Primitive),
        ("id", VarType::Primitive),
        ("nodes", VarType::Collection),
        ("identifier_to_count", VarType::Collection),
        ("this", VarType::Object),
        ("total_count", VarType::Primitive),
    ];
    assert_eq!(t.len(), expected.len());
    for (v, ty) in expected {
        assert_eq!(t.get(v), Some(ty), "{v}");
    }
}

fn foreach_body(r: &idiom_forge::dataflow::RegionTree) -> &idiom_forge::dataflow::RegionTree {
    match &r.controls[0] {
        Control::Foreach { body, .. } => body,
        _ => panic!("expected a foreach"),
    }
}

#[test]
fn call_stack_closed_table() {
    let m = method("example2_imperative.mh");
    let types = infer_types(&m);
    let regions = analyze_method(&m, &types).unwrap();
    let table = &foreach_body(&regions).table;
    assert_eq!(
        table.reads_of("collection_write_0").unwrap(),
        set(&[
            ("collection_0", "identifier_to_id"),
            ("primitive_0", "identifier"),
            ("primitive_1", "id"),
            ("collection_2", "nodes"),
            ("collection_3", "identifier_to_count"),
            ("object_0", "this"),
            ("primitive_2", "total_count"),
        ])
    );
    assert_eq!(
        table.reads_of("primitive_write_0").unwrap(),
        set(&[("collection_0", "identifier_to_id")])
    );
    assert_eq!(
        table.reads_of("primitive_write_1").unwrap(),
        set(&[("collection_0", "identifier_to_id")])
    );
    assert_eq!(table.len(), 3);
}

/// Outer partial table, inner table and merge, built with the flow
/// functions directly.
#[test]
fn nested_merge() {
    let m = method("nested.mh");
    let types = infer_types(&m);

    let mut outer = DataflowTable::new();
    let mut octx = RegionContext::new(&types);
    flow_foreach_header(&mut outer, &mut octx, &["identifiers"], Some("key"), "values", None).unwrap();
    flow_assign(&mut outer, &mut octx, "exp", false, &[], &["key"], None).unwrap();
    flow_assign(&mut outer, &mut octx, "results", false, &[], &["key"], None).unwrap();
    assert_eq!(outer.reads_of("collection_write_1").unwrap(), set(&[("primitive_0", "key")]));
    assert_eq!(outer.reads_of("primitive_write_1").unwrap(), set(&[("primitive_0", "key")]));
    assert_eq!(outer.reads_of("collection_write_0").unwrap(), set(&[("collection_0", "identifiers")]));

    let mut inner = DataflowTable::new();
    let mut ictx = RegionContext::new(&types);
    flow_foreach_header(&mut inner, &mut ictx, &["values"], None, "item", None).unwrap();
    flow_assign(&mut inner, &mut ictx, "results", false, &[], &["item", "exp"], None).unwrap();
    let inner = close_fixpoint(&inner);
    assert_eq!(
        inner.reads_of("collection_write_0").unwrap(),
        set(&[("collection_0", "values"), ("primitive_0", "item"), ("primitive_1", "exp")])
    );

    let merged = merge(&outer, &inner, &octx);
    assert_eq!(
        merged.reads_of("collection_write_1").unwrap(),
        set(&[("primitive_0", "key"), ("primitive_1", "exp"), ("collection_1", "values")])
    );
    assert_eq!(merged.len(), 4);
    assert!(merged.entries.iter().all(|e| e.write.var != "item"));
    assert_eq!(merge(&outer, &DataflowTable::new(), &octx), outer);
}

#[test]
fn nested_analysis_matches_direct_merge() {
    let m = method("nested.mh");
    let types = infer_types(&m);
    let regions = analyze_method(&m, &types).unwrap();
    let outer = &foreach_body(&regions).table;
    let reads = outer.reads_of("collection_write_1").unwrap();
    for r in [("primitive_0", "key"), ("primitive_1", "exp"), ("collection_1", "values")] {
        assert!(reads.contains(&(r.0.to_string(), r.1.to_string())));
    }
    // Closing the merged row also pulls in the loop subject.
    assert!(reads.contains(&("collection_0".to_string(), "identifiers".to_string())));
}

fn foreach_collection_head(root: &Node) -> Vec<String> {
    let mut found = None;
    root.walk(&mut |n| {
        if found.is_none() && n.label == "Foreach" {
            found = Some(n);
        }
    });
    let foreach = found.expect("no Foreach");
    let cwl = &foreach.children[0].children[1];
    assert_eq!(cwl.label, "CollectionWriteList");
    let mut out = vec![cwl.children[0].label.clone()];
    let mut n = &cwl.children[0].children[0];
    while n.label != "End" {
        out.push(n.label.clone());
        n = &n.children[0];
    }
    out
}

#[test]
fn motivating_examples_share_the_collection_write_prefix() {
    for f in ["example1_imperative.mh", "example2_imperative.mh", "example3_imperative.mh"] {
        let m = method(f);
        let types = infer_types(&m);
        let tree = build_df_tree(&m, &types, &analyze_method(&m, &types).unwrap());
        validate(&tree).unwrap();
        let chain = foreach_collection_head(&tree.root);
        assert_eq!(
            chain[..4],
            [
                "WriteRegion:collection_write_0",
                "ReadRegion:collection_0",
                "ReadRegion:primitive_0",
                "ReadRegion:primitive_1"
            ],
            "{f}: {chain:?}"
        );
    }
}

#[test]
fn example3_parses_to_assign_then_foreach() {
    let m = method("example3_imperative.mh");
    assert!(matches!(m.body.stmts[0].kind, StmtKind::Assign { .. }));
    let StmtKind::Foreach { key, value, body, .. } = &m.body.stmts[1].kind else {
        panic!("expected foreach");
    };
    assert_eq!(key.as_ref().unwrap().name, "key");
    assert_eq!(value.name, "value");
    assert!(matches!(
        body.stmts[0].kind,
        StmtKind::Assign {
            op: idiom_forge::frontend::AssignOp::Append,
            ..
        }
    ));
}
