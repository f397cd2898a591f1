//! Synthetic corpus with a planted map-with-key loop.
//!
//! Each file holds one method. Planted methods build a collection inside a
//! keyed `foreach` whose first collection write reads both the key and the
//! value. The surface form of that write, the accumulator kind, the loop
//! body length and the surrounding code are all randomized, and every method
//! draws fresh variable names. The remaining methods are straight-line code
//! or loops that never write a collection from both loop variables.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub plant_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n: 200,
            plant_rate: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodLabel {
    pub file: String,
    pub method: String,
    pub planted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticCorpus {
    /// (file name, source), in file-name order.
    pub files: Vec<(String, String)>,
    pub labels: Vec<MethodLabel>,
}

impl SyntheticCorpus {
    pub fn labels_json(&self) -> String {
        serde_json::to_string_pretty(&self.labels).expect("labels serialize")
    }

    pub fn planted(&self) -> impl Iterator<Item = &MethodLabel> {
        self.labels.iter().filter(|l| l.planted)
    }

    /// Writes the sources and `labels.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |p: &Path, source| CorpusError::Io {
            path: p.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, src) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, src).map_err(|e| io(&p, e))?;
        }
        let p = dir.join("labels.json");
        std::fs::write(&p, self.labels_json()).map_err(|e| io(&p, e))
    }
}

const WORDS: &[&str] = &[
    "items", "rows", "entries", "users", "ids", "names", "scores", "pairs", "nodes", "keys", "vals", "data", "list",
    "table", "tags", "edges", "groups", "result", "out", "acc", "buf", "total", "count", "index", "label", "item",
    "elem", "row", "entry", "score", "width", "limit", "offset", "cursor", "node", "edge", "group", "slot", "part",
    "chunk", "field", "token", "path", "size", "delta", "flag", "state", "owner", "parent", "child", "source",
    "target", "record", "batch", "page", "query", "token", "weight", "rank", "level", "depth", "bucket", "cell",
];

const FUNCS: &[&str] = &[
    "format_row", "make_pair", "encode", "combine", "render", "wrap", "normalize", "to_entry", "join_parts",
    "describe", "merge_kv", "build_item",
];

const METHODS: &[&str] = &["lookup", "resolve", "fetch", "load", "find", "record", "touch", "notify", "emit"];

/// Share of unplanted methods that contain a loop.
const LOOP_RATE: f64 = 0.12;

const FIELDS: &[&str] = &["cache", "items", "result", "state", "index", "last"];

/// Fresh, distinct variable names for one method.
struct Names {
    pool: Vec<String>,
}

impl Names {
    fn new(rng: &mut ChaCha8Rng) -> Names {
        let mut pool: Vec<String> = WORDS.iter().map(|w| w.to_string()).collect();
        pool.sort();
        pool.dedup();
        pool.shuffle(rng);
        for name in pool.iter_mut() {
            match rng.gen_range(0..4) {
                0 => name.push_str(&rng.gen_range(1..10).to_string()),
                1 => {
                    let w = WORDS[rng.gen_range(0..WORDS.len())];
                    *name = format!("{name}_{w}");
                }
                _ => {}
            }
        }
        // Suffixes can collide; keep first occurrences only.
        let mut seen = std::collections::BTreeSet::new();
        pool.retain(|n| seen.insert(n.clone()));
        Names { pool }
    }

    fn take(&mut self) -> String {
        self.pool.pop().expect("name pool exhausted")
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    names: Names,
    body: String,
    indent: usize,
}

impl Gen<'_> {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.body.push_str("  ");
        }
        self.body.push_str(s);
        self.body.push('\n');
    }

    fn lit(&mut self) -> String {
        self.rng.gen_range(0..100).to_string()
    }

    /// A primitive-valued expression over `vars`.
    fn prim_expr(&mut self, vars: &[String]) -> String {
        let a = pick(self.rng, vars).clone();
        match self.rng.gen_range(0..4) {
            0 => format!("${a} + {}", self.lit()),
            1 => format!("${a} * ${}", pick(self.rng, vars)),
            2 => format!("{}(${a})", pick(self.rng, FUNCS)),
            _ => format!("strlen(${a})"),
        }
    }

    /// One write of a primitive or object variable reading from `vars`.
    /// Returns the primitive it defined, if any.
    fn side_write(&mut self, vars: &[String], objects: &mut Vec<String>) -> Option<String> {
        if self.rng.gen_bool(0.6) || objects.is_empty() {
            let t = self.names.take();
            let e = self.prim_expr(vars);
            self.line(&format!("${t} = {e};"));
            Some(t)
        } else {
            let o = pick(self.rng, objects).clone();
            let f = *pick(self.rng, FIELDS);
            let v = pick(self.rng, vars).clone();
            if self.rng.gen_bool(0.5) {
                self.line(&format!("${o}->{f} = ${v};"));
            } else {
                let m = *pick(self.rng, METHODS);
                self.line(&format!("${o}->{m}(${v});"));
            }
            None
        }
    }
}

fn planted(g: &mut Gen<'_>, name: &str) -> String {
    let src = g.names.take();
    let mut params = vec![src.clone()];
    let mut objects = Vec::new();
    let mut prims = Vec::new();
    for _ in 0..g.rng.gen_range(0..3) {
        let p = g.names.take();
        if g.rng.gen_bool(0.4) {
            objects.push(p.clone());
        } else {
            prims.push(p.clone());
        }
        params.push(p);
    }
    // The outer collection the accumulator looks up by key.
    let outer = g.names.take();
    params.insert(g.rng.gen_range(0..=params.len()), outer.clone());

    // Prelude.
    for _ in 0..g.rng.gen_range(0..3) {
        let mut vars = prims.clone();
        vars.push(src.clone());
        if g.rng.gen_bool(0.5) {
            let n = g.names.take();
            g.line(&format!("${n} = count(${src});"));
            prims.push(n);
        } else if let Some(t) = g.side_write(&vars, &mut objects) {
            prims.push(t);
        }
    }

    let acc = g.names.take();
    let kind = g.rng.gen_range(0..3);
    let init = ["vec[]", "dict[]", "''"][kind];
    g.line(&format!("${acc} = {init};"));
    let key = g.names.take();
    let value = g.names.take();
    g.line(&format!("foreach (${src} as ${key} => ${value}) {{"));
    g.indent += 1;

    let mut loop_vars = vec![key.clone(), value.clone()];
    loop_vars.extend(prims.iter().cloned());
    let mut value_ref = value.clone();
    for _ in 0..g.rng.gen_range(0..3) {
        let vars = if g.rng.gen_bool(0.5) { vec![value.clone()] } else { loop_vars.clone() };
        if let Some(t) = g.side_write(&vars, &mut objects) {
            if g.rng.gen_bool(0.3) && vars.len() == 1 {
                // The accumulator reads the value through this temporary.
                value_ref = t.clone();
            }
            loop_vars.push(t);
        }
    }

    let mut args = vec![format!("${key}"), format!("${value_ref}"), format!("${outer}[${key}]")];
    if value_ref != value && g.rng.gen_bool(0.5) {
        args.push(format!("${value}"));
    }
    for _ in 0..g.rng.gen_range(0..3) {
        match g.rng.gen_range(0..2) {
            0 if !prims.is_empty() => args.push(format!("${}", pick(g.rng, &prims))),
            _ => args.push(g.lit()),
        }
    }
    args.shuffle(g.rng);
    let call = |g: &mut Gen<'_>, args: &[String]| -> String {
        match g.rng.gen_range(0..3) {
            0 => format!("tuple({})", args.join(", ")),
            1 if !objects.is_empty() => {
                let o = pick(g.rng, &objects).clone();
                format!("${o}->{}({})", pick(g.rng, METHODS), args.join(", "))
            }
            _ => format!("{}({})", pick(g.rng, FUNCS), args.join(", ")),
        }
    };
    match kind {
        0 => {
            let rhs = call(g, &args);
            g.line(&format!("${acc}[] = {rhs};"));
        }
        1 => {
            args.retain(|a| *a != format!("${key}"));
            let rhs = if args.len() == 1 { args[0].clone() } else { call(g, &args) };
            g.line(&format!("${acc}[${key}] = {rhs};"));
        }
        _ => {
            let rhs = call(g, &args);
            g.line(&format!("${acc} .= {rhs};"));
        }
    }

    if g.rng.gen_bool(0.3) {
        g.side_write(&loop_vars, &mut objects);
    }
    g.indent -= 1;
    g.line("}");

    match g.rng.gen_range(0..3) {
        0 => g.line(&format!("return ${acc};")),
        1 => {
            let f = *pick(g.rng, FIELDS);
            g.line(&format!("$this->{f} = ${acc};"));
        }
        _ => {}
    }
    wrap(name, &params, &g.body)
}

fn straight_line(g: &mut Gen<'_>, name: &str) -> String {
    let mut params = Vec::new();
    let mut prims = Vec::new();
    let mut objects = Vec::new();
    for _ in 0..g.rng.gen_range(1..4) {
        let p = g.names.take();
        if g.rng.gen_bool(0.3) {
            objects.push(p.clone());
        } else {
            prims.push(p.clone());
        }
        params.push(p);
    }
    if prims.is_empty() {
        let n = g.names.take();
        let m = *pick(g.rng, METHODS);
        g.line(&format!("${n} = $this->{m}();"));
        prims.push(n);
    }
    let mut colls: Vec<String> = Vec::new();
    for _ in 0..g.rng.gen_range(2..7) {
        match g.rng.gen_range(0..8) {
            0 => {
                let c = g.names.take();
                let a = pick(g.rng, &prims).clone();
                let b = pick(g.rng, &prims).clone();
                g.line(&format!("${c} = vec[${a}, ${b}];"));
                colls.push(c);
            }
            1 => {
                let c = g.names.take();
                let a = pick(g.rng, &prims).clone();
                let f = *pick(g.rng, FIELDS);
                g.line(&format!("${c} = dict['{f}' => ${a}];"));
                colls.push(c);
            }
            2 if !colls.is_empty() => {
                let t = g.names.take();
                let c = pick(g.rng, &colls).clone();
                let l = g.lit();
                g.line(&format!("${t} = ${c}[{l}];"));
                prims.push(t);
            }
            3 if g.rng.gen_bool(0.3) => {
                let a = pick(g.rng, &prims).clone();
                let b = g.names.take();
                let l = g.lit();
                g.line(&format!("if (${a} > {l}) {{"));
                g.indent += 1;
                g.line(&format!("${b} = ${a} - {l};"));
                g.indent -= 1;
                g.line("}");
            }
            4 => {
                let f = *pick(g.rng, FIELDS);
                let a = pick(g.rng, &prims).clone();
                g.line(&format!("$this->{f} = ${a};"));
            }
            _ => {
                let vars = prims.clone();
                if let Some(t) = g.side_write(&vars, &mut objects) {
                    prims.push(t);
                }
            }
        }
    }
    if g.rng.gen_bool(0.5) {
        let r = pick(g.rng, &prims).clone();
        g.line(&format!("return ${r};"));
    }
    wrap(name, &params, &g.body)
}

/// Loops that do not build a collection from both key and value.
fn other_loop(g: &mut Gen<'_>, name: &str) -> String {
    let src = g.names.take();
    let mut params = vec![src.clone()];
    let extra = g.names.take();
    params.push(extra.clone());
    let keyed = g.rng.gen_bool(0.5);
    let value = g.names.take();
    let variant = g.rng.gen_range(0..4);
    let acc = g.names.take();
    match variant {
        0 => g.line(&format!("${acc} = 0;")),
        1 | 2 => g.line(&format!("${acc} = vec[];")),
        _ => {}
    }
    let head = if keyed {
        let key = g.names.take();
        format!("foreach (${src} as ${key} => ${value}) {{")
    } else {
        format!("foreach (${src} as ${value}) {{")
    };
    g.line(&head);
    g.indent += 1;
    match variant {
        0 => g.line(&format!("${acc} += ${value};")),
        // Collection write that never reads the loop variables.
        1 => g.line(&format!("${acc}[] = ${extra};")),
        // Value-only map.
        2 => {
            let f = *pick(g.rng, FUNCS);
            if keyed {
                g.line(&format!("${acc}[] = {f}(${extra}, ${value});"));
            } else {
                g.line(&format!("${acc}[] = {f}(${value});"));
            }
        }
        _ => {
            let m = *pick(g.rng, METHODS);
            g.line(&format!("$this->{m}(${value});"));
        }
    }
    g.indent -= 1;
    g.line("}");
    if variant != 3 && g.rng.gen_bool(0.6) {
        g.line(&format!("return ${acc};"));
    }
    wrap(name, &params, &g.body)
}

fn wrap(name: &str, params: &[String], body: &str) -> String {
    let mut s = String::from("<?hh\n");
    let ps: Vec<String> = params.iter().map(|p| format!("${p}")).collect();
    let _ = writeln!(s, "function {name}({}) {{", ps.join(", "));
    for l in body.lines() {
        let _ = writeln!(s, "  {l}");
    }
    s.push_str("}\n");
    s
}

/// Builds the corpus. `⌈plant_rate·n⌉` methods are planted; output is a pure
/// function of the parameters.
pub fn generate_synthetic(params: &SyntheticParams) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let n_planted = ((params.plant_rate.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut is_planted = vec![false; n];
    for &i in &order[..n_planted] {
        is_planted[i] = true;
    }

    let mut files = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (i, &planted_here) in is_planted.iter().enumerate() {
        let names = Names::new(&mut rng);
        let mut g = Gen {
            rng: &mut rng,
            names,
            body: String::new(),
            indent: 0,
        };
        let method = format!("{}_{i}", pick(g.rng, FUNCS));
        let src = if planted_here {
            planted(&mut g, &method)
        } else if g.rng.gen_bool(LOOP_RATE) {
            other_loop(&mut g, &method)
        } else {
            straight_line(&mut g, &method)
        };
        let file = format!("m{i:04}.mh");
        labels.push(MethodLabel {
            file: file.clone(),
            method,
            planted: planted_here,
        });
        files.push((file, src));
    }
    SyntheticCorpus { files, labels }
}
