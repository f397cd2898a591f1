//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use idiom_forge::corpus::{generate_synthetic, source_trees, SyntheticCorpus, SyntheticParams};
use idiom_forge::dataflow::{
    analyze_method, close_fixpoint, flow_assign, flow_foreach_header, merge, Control, DataflowTable, RegionContext,
    RegionTree,
};
use idiom_forge::dftree::{build_df_tree, DfTree, Node, TreeMode};
use idiom_forge::frontend::{parse, MethodDecl};
use idiom_forge::idioms::{prune, rank, report, Idiom, Ranking, Weights};
use idiom_forge::ptsg::{
    merge_probability, mine, mine_unfiltered, posterior_prob, MineParams, PtsgGrammar, Sampler,
};
use idiom_forge::typeinfer::{infer_types, InferOptions, VarType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYNTHETIC_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> MethodDecl {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse(&src, name).unwrap().methods.remove(0)
}

fn pairs(p: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    p.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn foreach_body(r: &RegionTree) -> Option<&RegionTree> {
    r.controls.iter().find_map(|c| match c {
        Control::Foreach { body, .. } => Some(body),
        _ => None,
    })
}

fn criterion_1() -> Outcome {
    let t = infer_types(&fixture("example2_imperative.mh"));
    let expected: BTreeMap<&str, VarType> = [
        ("call_stack_nodes", VarType::Collection),
        ("identifier_to_id", VarType::Collection),
        ("identifier", VarType::Primitive),
        ("id", VarType::Primitive),
        ("nodes", VarType::Collection),
        ("identifier_to_count", VarType::Collection),
        ("this", VarType::Object),
        ("total_count", VarType::Primitive),
    ]
    .into_iter()
    .collect();
    let got: BTreeMap<&str, VarType> = t.entries.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    outcome(got == expected, format!("{} rows", got.len()))
}

fn criterion_2() -> Outcome {
    let m = fixture("example2_imperative.mh");
    let types = infer_types(&m);
    let Ok(regions) = analyze_method(&m, &types) else {
        return outcome(false, "analysis failed");
    };
    let reads = foreach_body(&regions).and_then(|b| b.table.reads_of("collection_write_0"));
    let expected = pairs(&[
        ("collection_0", "identifier_to_id"),
        ("primitive_0", "identifier"),
        ("primitive_1", "id"),
        ("collection_2", "nodes"),
        ("collection_3", "identifier_to_count"),
        ("object_0", "this"),
        ("primitive_2", "total_count"),
    ]);
    let n = reads.as_ref().map_or(0, BTreeSet::len);
    outcome(reads == Some(expected), format!("{n} read refs"))
}

fn criterion_3() -> Outcome {
    let m = fixture("nested.mh");
    let types = infer_types(&m);
    let run = || -> Result<DataflowTable, idiom_forge::dataflow::DataflowError> {
        let mut outer = DataflowTable::new();
        let mut octx = RegionContext::new(&types);
        flow_foreach_header(&mut outer, &mut octx, &["identifiers"], Some("key"), "values", None)?;
        flow_assign(&mut outer, &mut octx, "exp", false, &[], &["key"], None)?;
        flow_assign(&mut outer, &mut octx, "results", false, &[], &["key"], None)?;
        let mut inner = DataflowTable::new();
        let mut ictx = RegionContext::new(&types);
        flow_foreach_header(&mut inner, &mut ictx, &["values"], None, "item", None)?;
        flow_assign(&mut inner, &mut ictx, "results", false, &[], &["item", "exp"], None)?;
        Ok(merge(&outer, &close_fixpoint(&inner), &octx))
    };
    let Ok(merged) = run() else {
        return outcome(false, "flow functions failed");
    };
    let got = merged.reads_of("collection_write_1");
    let expected = pairs(&[("primitive_0", "key"), ("primitive_1", "exp"), ("collection_1", "values")]);
    outcome(got == Some(expected), format!("{:?}", got.unwrap_or_default()))
}

/// Labels of the first collection write chain under the first Foreach.
fn foreach_chain(root: &Node) -> Option<Vec<String>> {
    let mut foreach = None;
    root.walk(&mut |n| {
        if foreach.is_none() && n.label == "Foreach" {
            foreach = Some(n);
        }
    });
    let cwl = foreach?.children.first()?.children.get(1)?;
    let mut n = cwl.children.first()?;
    let mut out = Vec::new();
    while n.label != "End" {
        out.push(n.label.clone());
        n = n.children.first()?;
    }
    Some(out)
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    for f in [
        "example2_imperative.mh",
        "example1_imperative.mh",
        "example2_imperative.mh",
        "example3_imperative.mh",
    ] {
        let m = fixture(f);
        let types = infer_types(&m);
        let chain = analyze_method(&m, &types)
            .ok()
            .and_then(|r| foreach_chain(&build_df_tree(&m, &types, &r).root));
        let ok = chain.as_ref().is_some_and(|c| {
            c.len() >= 4
                && c[0] == "WriteRegion:collection_write_0"
                && c[1..4].iter().map(String::as_str).collect::<BTreeSet<_>>()
                    == ["ReadRegion:collection_0", "ReadRegion:primitive_0", "ReadRegion:primitive_1"]
                        .into_iter()
                        .collect()
        });
        if !ok {
            bad.push(f);
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "prefix found in all".into() } else { format!("missing in {bad:?}") })
}

struct Mined {
    trees: Vec<DfTree>,
    grammar: PtsgGrammar,
    elapsed: Duration,
}

fn synthetic() -> SyntheticCorpus {
    generate_synthetic(&SyntheticParams {
        n: 200,
        plant_rate: 0.3,
        seed: SYNTHETIC_SEED,
    })
}

fn trees_of(c: &SyntheticCorpus, mode: TreeMode) -> Vec<DfTree> {
    c.files
        .iter()
        .flat_map(|(f, s)| source_trees(s, f, mode, InferOptions::default()).expect("generated code analyzes"))
        .collect()
}

fn mine_synthetic(c: &SyntheticCorpus, mode: TreeMode) -> Mined {
    let start = Instant::now();
    let trees = trees_of(c, mode);
    let grammar = mine(
        &trees,
        &MineParams {
            seed: SYNTHETIC_SEED,
            ..MineParams::default()
        },
    )
    .expect("mining succeeds");
    Mined {
        trees,
        grammar,
        elapsed: start.elapsed(),
    }
}

fn ranked(m: &Mined, scheme: Ranking) -> Vec<Idiom> {
    let pruned = prune(&m.grammar, &m.trees, 2, 6);
    rank(&pruned, &m.trees, scheme, &Weights::default()).expect("ranking succeeds")
}

/// (precision, recall) of the top-1 idiom's flagged methods.
fn top1_scores(m: &Mined, c: &SyntheticCorpus, scheme: Ranking) -> (f64, f64, usize) {
    let idioms = ranked(m, scheme);
    let top: Vec<Idiom> = idioms.into_iter().take(1).collect();
    let flagged = report(&top, &m.trees).flagged_methods();
    let planted: BTreeSet<(String, String)> = c.planted().map(|l| (l.file.clone(), l.method.clone())).collect();
    let tp = flagged.intersection(&planted).count() as f64;
    let precision = if flagged.is_empty() { 0.0 } else { tp / flagged.len() as f64 };
    (precision, tp / planted.len() as f64, top.len())
}

fn criterion_5(c: &SyntheticCorpus, df: &Mined) -> Outcome {
    let (p, r, n) = top1_scores(df, c, Ranking::Iou);
    let pass = n == 1 && r >= 0.85 && p >= 0.85 && df.elapsed < Duration::from_secs(600);
    let note = if n == 0 { ", no idiom survives pruning" } else { "" };
    outcome(
        pass,
        format!("recall={r:.3} precision={p:.3} in {:.1}s{note}", df.elapsed.as_secs_f64()),
    )
}

fn criterion_6(c: &SyntheticCorpus, df: &Mined, plain: &Mined) -> Outcome {
    let (_, r_df, _) = top1_scores(df, c, Ranking::Iou);
    let (_, r_plain, _) = top1_scores(plain, c, Ranking::Iou);
    outcome(r_plain < r_df, format!("plain recall={r_plain:.3} dataflow recall={r_df:.3}"))
}

fn criterion_7(c: &SyntheticCorpus) -> Outcome {
    let trees: Vec<DfTree> = trees_of(c, TreeMode::Dataflow).into_iter().take(20).collect();
    let mut s = Sampler::new(&trees, 5.0, SYNTHETIC_SEED).expect("sampler");
    s.activate_all();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nodes: Vec<u32> = (0..trees.len()).flat_map(|t| s.sampleable(t).to_vec()).collect();
    let mut checks = 0;
    for step in 1..=5_000u32 {
        let t = nodes[rng.gen_range(0..nodes.len())];
        s.gibbs_step(t);
        if step % 100 == 0 {
            if s.recount() != s.counts() || !s.root_counts_consistent() {
                return outcome(false, format!("count drift after {step} steps"));
            }
            checks += 1;
        }
    }
    let params = MineParams {
        seed: SYNTHETIC_SEED,
        ..MineParams::default()
    };
    let g = mine_unfiltered(&trees, &params).expect("mining");
    let worst = g.prob_sums().values().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return outcome(false, format!("posterior sums off by {worst:e}"));
    }
    let a = mine(&trees, &params).expect("mining").to_json_string();
    let b = mine(&trees, &params).expect("mining").to_json_string();
    outcome(
        a == b,
        format!("{checks} recount checks, max |sum-1|={worst:.1e}, grammar bytes identical={}", a == b),
    )
}

/// Closed reads per write, computed as reachability over the graph whose
/// edges run from a write to every write of a variable it reads.
fn reachability_oracle(sigma: &DataflowTable) -> Vec<BTreeSet<(String, String)>> {
    let n = sigma.entries.len();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sigma.entries[i].reads.iter().any(|r| r.var == sigma.entries[j].write.var))
                .collect()
        })
        .collect();
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            let mut out = BTreeSet::new();
            while let Some(i) = stack.pop() {
                if std::mem::replace(&mut seen[i], true) {
                    continue;
                }
                out.extend(sigma.entries[i].reads.iter().map(|r| (r.label(), r.var.clone())));
                stack.extend(succ[i].iter().copied());
            }
            out
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..500 {
        let nvars = rng.gen_range(1..=6);
        let vars: Vec<String> = (0..nvars).map(|i| format!("v{i}")).collect();
        let mut stmts: Vec<(String, bool, Vec<String>)> = Vec::new();
        let mut src = String::from("function f(");
        src.push_str(&vars.iter().map(|v| format!("${v}")).collect::<Vec<_>>().join(", "));
        src.push_str(") {\n");
        for _ in 0..rng.gen_range(1..=8) {
            let target = vars[rng.gen_range(0..nvars)].clone();
            let compound = rng.gen_bool(0.25);
            let rhs: Vec<String> = (0..rng.gen_range(0..=3)).map(|_| vars[rng.gen_range(0..nvars)].clone()).collect();
            let expr = if rhs.is_empty() {
                "1".to_string()
            } else {
                format!("g({})", rhs.iter().map(|v| format!("${v}")).collect::<Vec<_>>().join(", "))
            };
            let op = if compound { "+=" } else { "=" };
            src.push_str(&format!("  ${target} {op} {expr};\n"));
            stmts.push((target, compound, rhs));
        }
        src.push_str("}\n");
        let m = parse(&src, "gen.mh").expect("generated program parses").methods.remove(0);
        let types = infer_types(&m);
        let mut sigma = DataflowTable::new();
        let mut ctx = RegionContext::new(&types);
        for (target, compound, rhs) in &stmts {
            let rhs: Vec<&str> = rhs.iter().map(String::as_str).collect();
            flow_assign(&mut sigma, &mut ctx, target, *compound, &[], &rhs, None).expect("known variables");
        }
        let closed = close_fixpoint(&sigma);
        let got: Vec<BTreeSet<(String, String)>> = closed
            .entries
            .iter()
            .map(|e| e.reads.iter().map(|r| (r.label(), r.var.clone())).collect())
            .collect();
        if got != reachability_oracle(&sigma) {
            return outcome(false, format!("case {case} differs:\n{src}"));
        }
        let analyzed = analyze_method(&m, &types).expect("analysis");
        if analyzed.table.entries.iter().map(|e| &e.reads).ne(closed.entries.iter().map(|e| &e.reads)) {
            return outcome(false, format!("case {case}: analyze_method disagrees with direct closure"));
        }
    }
    let t = start.elapsed();
    outcome(t < Duration::from_secs(30), format!("500 programs in {:.2}s", t.as_secs_f64()))
}

fn criterion_9() -> Outcome {
    let p = posterior_prob(3, 7, 5.0, 0.2);
    let (ps, pt) = (0.3, 0.45);
    let q = merge_probability(ps * pt, ps, pt);
    outcome(p == 1.0 / 3.0 && q == 0.5, format!("posterior={p} merge={q}"))
}

fn criterion_10(c: &SyntheticCorpus, df: &Mined) -> Outcome {
    // Bounds on every candidate that survives pruning, before the
    // probability filter so the check has something to look at.
    let unfiltered = Mined {
        trees: df.trees.clone(),
        grammar: mine_unfiltered(
            &df.trees,
            &MineParams {
                seed: SYNTHETIC_SEED,
                ..MineParams::default()
            },
        )
        .expect("mining"),
        elapsed: Duration::ZERO,
    };
    let all = ranked(&unfiltered, Ranking::Iou);
    let in_unit = |x: f64| (0.0..=1.0).contains(&x);
    let bounded = all.iter().all(|i| in_unit(i.scores.coverage) && in_unit(i.scores.iou));

    let pruned = prune(&unfiltered.grammar, &unfiltered.trees, 2, 6);
    let base = rank(&pruned, &unfiltered.trees, Ranking::Iou, &Weights::default()).expect("rank");
    let order = |v: &[Idiom]| v.iter().map(Idiom::serialization).collect::<Vec<_>>();
    let scale_invariant = [0.01, 0.5, 3.0, 250.0].iter().all(|&k| {
        let scaled = rank(&pruned, &unfiltered.trees, Ranking::Iou, &Weights::default().scaled(k)).expect("rank");
        order(&scaled) == order(&base)
    });

    let recalls: Vec<f64> = [Ranking::Coverage, Ranking::Ce, Ranking::Iou]
        .into_iter()
        .map(|s| top1_scores(df, c, s).1)
        .collect();
    let spread = recalls.iter().cloned().fold(f64::MIN, f64::max) - recalls.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        bounded && scale_invariant && spread <= 0.05,
        format!(
            "{} idioms bounded={bounded} scale-invariant={scale_invariant} top-1 recall C/CE/IoU={:.3}/{:.3}/{:.3}",
            all.len(),
            recalls[0],
            recalls[1],
            recalls[2]
        ),
    )
}

fn main() {
    let corpus = synthetic();
    let df = mine_synthetic(&corpus, TreeMode::Dataflow);
    let plain = mine_synthetic(&corpus, TreeMode::Plain);
    let results = [
        ("1 type table of the call-stack example", criterion_1()),
        ("2 closed dataflow table of the call-stack example", criterion_2()),
        ("3 merge of the nested-loop listing", criterion_3()),
        ("4 shared collection-write prefix", criterion_4()),
        ("5 planted-idiom recovery", criterion_5(&corpus, &df)),
        ("6 dataflow beats plain", criterion_6(&corpus, &df, &plain)),
        ("7 sampler invariants", criterion_7(&corpus)),
        ("8 fixpoint vs reachability", criterion_8()),
        ("9 formula spot checks", criterion_9()),
        ("10 ranking sanity", criterion_10(&corpus, &df)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
