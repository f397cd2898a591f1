//! Random MiniHack programs for property tests. Programs are kept as a small
//! tree over variable indices so the same program can be rendered under
//! different variable names.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub enum E {
    Var(usize),
    Int(u32),
    Str(&'static str),
    Bin(&'static str, Box<E>, Box<E>),
    Sub(usize, Box<E>),
    Prop(usize, &'static str),
    Call(&'static str, Vec<E>),
    This(&'static str, Vec<E>),
    Vec(Vec<E>),
    Dict(Vec<(E, E)>),
    Tuple(Vec<E>),
}

#[derive(Clone, Debug)]
pub enum S {
    Assign(usize, &'static str, E),
    Append(usize, E),
    Index(usize, E, E),
    PropSet(usize, &'static str, E),
    Foreach(usize, Option<usize>, usize, Vec<S>),
    If(E, Vec<S>, Option<Vec<S>>),
    Return(Option<E>),
    Expr(E),
}

#[derive(Clone, Debug)]
pub struct Program {
    pub nvars: usize,
    pub params: Vec<usize>,
    pub body: Vec<S>,
}

const FUNCS: &[&str] = &["g", "h", "Str\\len", "count"];
const PROPS: &[&str] = &["f", "next", "items"];
const STRS: &[&str] = &["a", "key", "x y"];
const BINOPS: &[&str] = &["+", "-", "*", ".", "===", "<", "&&", "||"];

struct Gen {
    rng: ChaCha8Rng,
    nvars: usize,
}

impl Gen {
    fn var(&mut self) -> usize {
        self.rng.gen_range(0..self.nvars)
    }

    fn expr(&mut self, depth: u32) -> E {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            return match self.rng.gen_range(0..4) {
                0 => E::Int(self.rng.gen_range(0..100)),
                1 => E::Str(STRS.choose(&mut self.rng).unwrap()),
                _ => E::Var(self.var()),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 | 1 => E::Bin(
                BINOPS.choose(&mut self.rng).unwrap(),
                Box::new(self.expr(d)),
                Box::new(self.expr(d)),
            ),
            2 => E::Sub(self.var(), Box::new(self.expr(d))),
            3 => E::Prop(self.var(), PROPS.choose(&mut self.rng).unwrap()),
            4 => {
                let f = FUNCS.choose(&mut self.rng).unwrap();
                E::Call(f, self.exprs(d))
            }
            5 => E::This("m", self.exprs(d)),
            6 => E::Vec(self.exprs(d)),
            7 => {
                let n = self.rng.gen_range(0..3);
                E::Dict((0..n).map(|_| (self.expr(d), self.expr(d))).collect())
            }
            _ => {
                let n = self.rng.gen_range(1..3);
                E::Tuple((0..n).map(|_| self.expr(d)).collect())
            }
        }
    }

    fn exprs(&mut self, depth: u32) -> Vec<E> {
        let n = self.rng.gen_range(0..3);
        (0..n).map(|_| self.expr(depth)).collect()
    }

    fn block(&mut self, depth: u32, max: usize) -> Vec<S> {
        let n = self.rng.gen_range(1..=max);
        let mut out: Vec<S> = (0..n).map(|_| self.stmt(depth)).collect();
        if self.rng.gen_bool(0.1) {
            let e = self.rng.gen_bool(0.7).then(|| self.expr(2));
            out.push(S::Return(e));
        }
        out
    }

    fn stmt(&mut self, depth: u32) -> S {
        let nested = depth > 0;
        match self.rng.gen_range(0..if nested { 10 } else { 8 }) {
            0 | 1 => {
                let op = ["=", "=", ".=", "+="].choose(&mut self.rng).unwrap();
                S::Assign(self.var(), op, self.expr(2))
            }
            2 => S::Append(self.var(), self.expr(2)),
            3 => S::Index(self.var(), self.expr(1), self.expr(2)),
            4 => S::PropSet(self.var(), PROPS.choose(&mut self.rng).unwrap(), self.expr(2)),
            5 | 6 => S::Expr(self.expr(2)),
            7 => S::Assign(self.var(), "=", E::Var(self.var())),
            8 => {
                let key = self.rng.gen_bool(0.5).then(|| self.var());
                S::Foreach(self.var(), key, self.var(), self.block(depth - 1, 3))
            }
            _ => {
                let els = self.rng.gen_bool(0.5).then(|| self.block(depth - 1, 2));
                S::If(self.expr(1), self.block(depth - 1, 2), els)
            }
        }
    }
}

pub fn program(seed: u64) -> Program {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        nvars: 0,
    };
    g.nvars = g.rng.gen_range(2..=7);
    let mut params: Vec<usize> = (0..g.nvars).filter(|_| g.rng.gen_bool(0.4)).collect();
    params.shuffle(&mut g.rng);
    let body = g.block(2, 6);
    Program {
        nvars: g.nvars,
        params,
        body,
    }
}

/// Default variable names.
pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// Another injective naming, disjoint from [`names`].
pub fn renamed(n: usize, seed: u64) -> Vec<String> {
    let mut out: Vec<String> = (0..n).map(|i| format!("w{}_{}", seed % 97, i * 7 + 3)).collect();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

fn render_expr(e: &E, n: &[String], out: &mut String) {
    let list = |xs: &[E], out: &mut String| {
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            render_expr(x, n, out);
        }
    };
    match e {
        E::Var(v) => out.push_str(&format!("${}", n[*v])),
        E::Int(i) => out.push_str(&i.to_string()),
        E::Str(s) => out.push_str(&format!("'{s}'")),
        E::Bin(op, a, b) => {
            out.push('(');
            render_expr(a, n, out);
            out.push_str(&format!(" {op} "));
            render_expr(b, n, out);
            out.push(')');
        }
        E::Sub(v, i) => {
            out.push_str(&format!("${}[", n[*v]));
            render_expr(i, n, out);
            out.push(']');
        }
        E::Prop(v, p) => out.push_str(&format!("${}->{p}", n[*v])),
        E::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            list(args, out);
            out.push(')');
        }
        E::This(m, args) => {
            out.push_str(&format!("$this->{m}("));
            list(args, out);
            out.push(')');
        }
        E::Vec(xs) => {
            out.push_str("vec[");
            list(xs, out);
            out.push(']');
        }
        E::Tuple(xs) => {
            out.push_str("tuple(");
            list(xs, out);
            out.push(')');
        }
        E::Dict(kvs) => {
            out.push_str("dict[");
            for (i, (k, v)) in kvs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_expr(k, n, out);
                out.push_str(" => ");
                render_expr(v, n, out);
            }
            out.push(']');
        }
    }
}

fn render_block(stmts: &[S], n: &[String], indent: usize, out: &mut String) {
    for s in stmts {
        render_stmt(s, n, indent, out);
    }
}

fn render_stmt(s: &S, n: &[String], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let e = |e: &E| {
        let mut s = String::new();
        render_expr(e, n, &mut s);
        s
    };
    match s {
        S::Assign(t, op, rhs) => out.push_str(&format!("{pad}${} {op} {};\n", n[*t], e(rhs))),
        S::Append(t, rhs) => out.push_str(&format!("{pad}${}[] = {};\n", n[*t], e(rhs))),
        S::Index(t, i, rhs) => out.push_str(&format!("{pad}${}[{}] = {};\n", n[*t], e(i), e(rhs))),
        S::PropSet(t, p, rhs) => out.push_str(&format!("{pad}${}->{p} = {};\n", n[*t], e(rhs))),
        S::Expr(x) => out.push_str(&format!("{pad}{};\n", e(x))),
        S::Return(None) => out.push_str(&format!("{pad}return;\n")),
        S::Return(Some(x)) => out.push_str(&format!("{pad}return {};\n", e(x))),
        S::Foreach(subj, key, val, body) => {
            let head = match key {
                Some(k) => format!("${} => ${}", n[*k], n[*val]),
                None => format!("${}", n[*val]),
            };
            out.push_str(&format!("{pad}foreach (${} as {head}) {{\n", n[*subj]));
            render_block(body, n, indent + 1, out);
            out.push_str(&format!("{pad}}}\n"));
        }
        S::If(c, then, els) => {
            out.push_str(&format!("{pad}if ({}) {{\n", e(c)));
            render_block(then, n, indent + 1, out);
            match els {
                Some(b) => {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    render_block(b, n, indent + 1, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
                None => out.push_str(&format!("{pad}}}\n")),
            }
        }
    }
}

/// Renders the program as one method named `m`.
pub fn render(p: &Program, n: &[String]) -> String {
    let params: Vec<String> = p.params.iter().map(|&i| format!("${}", n[i])).collect();
    let mut out = format!("function m({}) {{\n", params.join(", "));
    render_block(&p.body, n, 1, &mut out);
    out.push_str("}\n");
    out
}
