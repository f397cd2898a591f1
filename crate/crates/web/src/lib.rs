//! Browser bindings for the demo page. Every entry point takes and returns
//! JSON strings; the plain functions are what the wasm exports wrap.

use std::collections::BTreeSet;

use idiom_forge::corpus::{generate_synthetic, source_trees, SyntheticParams};
use idiom_forge::dataflow::analyze_method;
use idiom_forge::dftree::{method_df_tree, DfTree, Node, TreeMode};
use idiom_forge::frontend::{method_to_plain_tree, parse};
use idiom_forge::idioms::{prune, rank, report, Ranking, Weights};
use idiom_forge::ptsg::{mine, MineParams};
use idiom_forge::typeinfer::{infer_types, InferOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn indented(n: &Node, depth: usize, out: &mut String) {
    out.push_str(&"  ".repeat(depth));
    out.push_str(&n.label);
    if let Some(v) = &n.var {
        out.push_str(&format!("  (${v})"));
    }
    out.push('\n');
    for c in &n.children {
        indented(c, depth + 1, out);
    }
}

fn tree_text(n: &Node) -> String {
    let mut s = String::new();
    indented(n, 0, &mut s);
    s
}

/// Types, dataflow tables and both tree forms for every method in `src`.
pub fn analyze_source(src: &str) -> Result<String, String> {
    let ast = parse(src, "input.mh").map_err(|e| e.to_string())?;
    let mut methods = Vec::new();
    for m in &ast.methods {
        let types = infer_types(m);
        let regions = analyze_method(m, &types).map_err(|e| e.to_string())?;
        let df = method_df_tree(m, InferOptions::default()).map_err(|e| e.to_string())?;
        methods.push(json!({
            "method": m.name,
            "types": types.to_json()["types"],
            "regions": regions.to_json(),
            "dataflow_tree": tree_text(&df.root),
            "plain_tree": tree_text(&method_to_plain_tree(m).root),
        }));
    }
    Ok(Value::Array(methods).to_string())
}

/// A labelled synthetic corpus: `{"files": [{file, source}], "labels": [..]}`.
pub fn synthetic_corpus(n: usize, plant_rate: f64, seed: u64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&plant_rate) {
        return Err(format!("plant rate must be in [0, 1], got {plant_rate}"));
    }
    let c = generate_synthetic(&SyntheticParams { n, plant_rate, seed });
    let files: Vec<Value> = c.files.iter().map(|(f, s)| json!({"file": f, "source": s})).collect();
    Ok(json!({"files": files, "labels": c.labels}).to_string())
}

#[derive(serde::Deserialize)]
#[serde(default)]
struct MineRequest {
    files: Vec<SourceFile>,
    mode: TreeMode,
    alpha: f64,
    iterations: u32,
    seed: u64,
    min_frag_prob: f64,
    c_min: usize,
    n_min: usize,
    top_k: usize,
    /// `(file, method)` pairs known to contain the idiom, for scoring.
    planted: Option<Vec<(String, String)>>,
}

#[derive(serde::Deserialize)]
struct SourceFile {
    file: String,
    source: String,
}

impl Default for MineRequest {
    fn default() -> Self {
        let m = MineParams::default();
        MineRequest {
            files: Vec::new(),
            mode: TreeMode::Dataflow,
            alpha: m.alpha,
            iterations: m.iterations,
            seed: m.seed,
            min_frag_prob: m.min_frag_prob,
            c_min: 2,
            n_min: 6,
            top_k: 3,
            planted: None,
        }
    }
}

/// Mines `request.files`, ranks by IoU and reports where the top idioms match.
pub fn mine_and_match_json(request: &str) -> Result<String, String> {
    let req: MineRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let mut trees: Vec<DfTree> = Vec::new();
    let mut skipped = Vec::new();
    for f in &req.files {
        match source_trees(&f.source, &f.file, req.mode, InferOptions::default()) {
            Ok(ts) => trees.extend(ts),
            Err(e) => skipped.push(e.to_string()),
        }
    }
    let params = MineParams {
        alpha: req.alpha,
        iterations: req.iterations,
        seed: req.seed,
        min_frag_prob: req.min_frag_prob,
        ..MineParams::default()
    };
    let grammar = mine(&trees, &params).map_err(|e| e.to_string())?;
    let pruned = prune(&grammar, &trees, req.c_min, req.n_min);
    let ranked = rank(&pruned, &trees, Ranking::Iou, &Weights::default()).map_err(|e| e.to_string())?;
    let top: Vec<_> = ranked.into_iter().take(req.top_k).collect();
    let rep = report(&top, &trees);
    let mut out = json!({
        "trees": trees.len(),
        "skipped": skipped,
        "fragments": grammar.fragments.len(),
        "candidates": pruned.len(),
        "report": rep.to_json(),
    });
    if let Some(planted) = req.planted {
        let planted: BTreeSet<(String, String)> = planted.into_iter().collect();
        let flagged = report(&top[..top.len().min(1)], &trees).flagged_methods();
        let hit = flagged.intersection(&planted).count() as f64;
        out["top1"] = json!({
            "flagged": flagged.len(),
            "precision": if flagged.is_empty() { 0.0 } else { hit / flagged.len() as f64 },
            "recall": if planted.is_empty() { 0.0 } else { hit / planted.len() as f64 },
        });
    }
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn analyze(src: &str) -> Result<String, JsValue> {
    analyze_source(src).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn synthetic(n: usize, plant_rate: f64, seed: u32) -> Result<String, JsValue> {
    synthetic_corpus(n, plant_rate, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mine_and_match(request: &str) -> Result<String, JsValue> {
    mine_and_match_json(request).map_err(|e| JsValue::from_str(&e))
}
