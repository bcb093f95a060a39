//! Test-side generators and oracles. Nothing here calls into the library's
//! condition algebra, parser, or centrality code; the oracles re-derive the
//! expected results from first principles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use num::rational::Ratio;
use num::Zero;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use varcomplex::cparse::{scan_source, ScannedSource, SourceFile, Stoplist};
use varcomplex::pcalg::{ConfigAssignment, OptionName, PresenceCondition};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// #if expression evaluation (oracle side)

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Defined,
    Ident(String),
    Num(i64),
    LParen,
    RParen,
    Not,
    And,
    Or,
}

fn lex_expr(s: &str) -> Vec<Tok> {
    let b: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else if c == '!' {
            out.push(Tok::Not);
            i += 1;
        } else if c == '&' && b.get(i + 1) == Some(&'&') {
            out.push(Tok::And);
            i += 2;
        } else if c == '|' && b.get(i + 1) == Some(&'|') {
            out.push(Tok::Or);
            i += 2;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Num(b[start..i].iter().collect::<String>().parse().unwrap()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == '_') {
                i += 1;
            }
            let w: String = b[start..i].iter().collect();
            out.push(if w == "defined" { Tok::Defined } else { Tok::Ident(w) });
        } else {
            panic!("oracle cannot evaluate {s:?}");
        }
    }
    out
}

struct Eval<'a> {
    toks: Vec<Tok>,
    pos: usize,
    env: &'a dyn Fn(&str) -> bool,
}

impl Eval<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Tok {
        self.pos += 1;
        self.toks[self.pos - 1].clone()
    }

    fn or(&mut self) -> bool {
        let mut v = self.and();
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let r = self.and();
            v = v || r;
        }
        v
    }

    fn and(&mut self) -> bool {
        let mut v = self.unary();
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let r = self.unary();
            v = v && r;
        }
        v
    }

    fn unary(&mut self) -> bool {
        match self.next() {
            Tok::Not => !self.unary(),
            Tok::LParen => {
                let v = self.or();
                assert_eq!(self.next(), Tok::RParen);
                v
            }
            Tok::Defined => match self.next() {
                Tok::Ident(name) => (self.env)(&name),
                Tok::LParen => {
                    let Tok::Ident(name) = self.next() else { panic!("defined( needs a name") };
                    assert_eq!(self.next(), Tok::RParen);
                    (self.env)(&name)
                }
                t => panic!("unexpected {t:?} after defined"),
            },
            Tok::Num(n) => n != 0,
            // undefined macros evaluate to 0 in #if
            Tok::Ident(_) => false,
            t => panic!("unexpected {t:?}"),
        }
    }
}

pub fn eval_if(expr: &str, env: &dyn Fn(&str) -> bool) -> bool {
    let mut e = Eval { toks: lex_expr(expr), pos: 0, env };
    let v = e.or();
    assert_eq!(e.pos, e.toks.len(), "trailing tokens in {expr:?}");
    v
}

/// Keep the lines a C preprocessor would keep under `env`; directive lines
/// are dropped.
pub fn preprocess(text: &str, env: &dyn Fn(&str) -> bool) -> String {
    struct Frame {
        parent: bool,
        taken: bool,
        active: bool,
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut out = String::new();
    for line in text.lines() {
        let active = stack.last().is_none_or(|f| f.active);
        let Some(d) = line.trim_start().strip_prefix('#') else {
            if active {
                out.push_str(line);
                out.push('\n');
            }
            continue;
        };
        let d = d.trim_start();
        let (kw, rest) = d.split_at(d.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(d.len()));
        let rest = rest.trim();
        match kw {
            "ifdef" | "ifndef" | "if" => {
                let c = match kw {
                    "ifdef" => env(rest),
                    "ifndef" => !env(rest),
                    _ => eval_if(rest, env),
                };
                stack.push(Frame { parent: active, taken: c, active: active && c });
            }
            "elif" => {
                let f = stack.last_mut().expect("#elif without #if");
                let c = !f.taken && eval_if(rest, env);
                f.active = f.parent && c;
                f.taken |= c;
            }
            "else" => {
                let f = stack.last_mut().expect("#else without #if");
                f.active = f.parent && !f.taken;
                f.taken = true;
            }
            "endif" => {
                stack.pop().expect("#endif without #if");
            }
            _ => {
                if active {
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
    }
    assert!(stack.is_empty(), "unterminated #if");
    out
}

// ---------------------------------------------------------------------------
// Random corpora

#[derive(Debug, Clone)]
pub struct GenFile {
    pub path: String,
    /// `#if`-syntax condition for the whole file.
    pub file_pc: String,
    pub content: String,
}

#[derive(Debug, Clone)]
pub struct GenCorpus {
    pub options: Vec<String>,
    pub files: Vec<GenFile>,
}

pub struct GenParams {
    pub files: usize,
    pub options: usize,
    pub items_per_file: usize,
    pub names: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { files: 3, options: 6, items_per_file: 4, names: 14 }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    options: Vec<String>,
    names: Vec<String>,
    next_name: usize,
}

impl Gen<'_> {
    fn opt(&mut self) -> String {
        self.options.choose(self.rng).unwrap().clone()
    }

    fn cond_expr(&mut self, depth: usize) -> String {
        let roll = self.rng.random_range(0..if depth == 0 { 3 } else { 6 });
        match roll {
            0 => format!("defined({})", self.opt()),
            1 => format!("defined {}", self.opt()),
            2 => format!("!defined({})", self.opt()),
            3 => format!("{} && {}", self.cond_atomish(depth - 1), self.cond_atomish(depth - 1)),
            4 => format!("{} || {}", self.cond_atomish(depth - 1), self.cond_atomish(depth - 1)),
            _ => format!("!({})", self.cond_expr(depth - 1)),
        }
    }

    fn cond_atomish(&mut self, depth: usize) -> String {
        let e = self.cond_expr(depth);
        if e.contains("&&") || e.contains("||") {
            format!("({e})")
        } else {
            e
        }
    }

    fn opening(&mut self) -> String {
        match self.rng.random_range(0..4) {
            0 => format!("#ifdef {}", self.opt()),
            1 => format!("#ifndef {}", self.opt()),
            _ => {
                let e = self.cond_expr(2);
                format!("#if {e}")
            }
        }
    }

    fn callee(&mut self) -> String {
        if self.rng.random_bool(0.1) {
            ["printk", "memcpy", "kfree"].choose(self.rng).unwrap().to_string()
        } else {
            self.names.choose(self.rng).unwrap().clone()
        }
    }

    fn statement(&mut self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let c = self.callee();
        match self.rng.random_range(0..4) {
            0 => writeln!(out, "{pad}x += {c}(x);"),
            1 => writeln!(out, "{pad}{c}(x);"),
            2 => writeln!(out, "{pad}if ({c}(x)) x++;"),
            _ => writeln!(out, "{pad}x = x * 2;"),
        }
        .unwrap();
    }

    fn block(&mut self, out: &mut String, indent: usize, depth: usize) {
        for _ in 0..self.rng.random_range(1..4) {
            if depth < 3 && self.rng.random_bool(0.35) {
                self.group(out, indent, depth, &mut |g, out, indent, depth| g.block(out, indent + 1, depth + 1));
            } else {
                self.statement(out, indent);
            }
        }
    }

    fn group(
        &mut self,
        out: &mut String,
        indent: usize,
        depth: usize,
        branch: &mut dyn FnMut(&mut Self, &mut String, usize, usize),
    ) {
        let dpad = if self.rng.random_bool(0.3) { "  ".repeat(indent) } else { String::new() };
        let open = self.opening();
        writeln!(out, "{dpad}{open}").unwrap();
        branch(self, out, indent, depth);
        for _ in 0..self.rng.random_range(0..2) {
            let e = self.cond_expr(1);
            writeln!(out, "{dpad}#elif {e}").unwrap();
            branch(self, out, indent, depth);
        }
        if self.rng.random_bool(0.4) {
            writeln!(out, "{dpad}#else").unwrap();
            branch(self, out, indent, depth);
        }
        writeln!(out, "{dpad}#endif").unwrap();
    }

    fn function(&mut self, out: &mut String, name: &str) {
        let ret = ["int", "long", "static int"].choose(self.rng).unwrap();
        if self.rng.random_bool(0.5) {
            writeln!(out, "{ret} {name}(int x) {{").unwrap();
        } else {
            writeln!(out, "{ret} {name}(int x)\n{{").unwrap();
        }
        self.block(out, 1, 0);
        writeln!(out, "  return x;\n}}\n").unwrap();
    }

    fn fresh_name(&mut self) -> Option<String> {
        let n = self.names.get(self.next_name).cloned();
        self.next_name += 1;
        n
    }

    fn item(&mut self, out: &mut String, depth: usize) {
        if depth < 2 && self.rng.random_bool(0.45) {
            // alternatives share one name; otherwise each branch gets its own
            let shared = if self.rng.random_bool(0.5) { self.fresh_name() } else { None };
            self.group(out, 0, depth, &mut |g, out, _, depth| {
                if g.rng.random_bool(0.25) {
                    g.item(out, depth + 1);
                } else if let Some(name) = shared.clone().or_else(|| g.fresh_name()) {
                    g.function(out, &name);
                }
            });
        } else if let Some(name) = self.fresh_name() {
            self.function(out, &name);
        }
    }
}

pub fn generate_corpus(seed: u64, p: &GenParams) -> GenCorpus {
    let mut rng = rng(seed);
    let options: Vec<String> = (0..p.options).map(|i| format!("CONFIG_O{i}")).collect();
    let names: Vec<String> = (0..p.names).map(|i| format!("fn_{i}")).collect();
    let mut g = Gen { rng: &mut rng, options: options.clone(), names, next_name: 0 };
    let mut files = Vec::new();
    for f in 0..p.files {
        let mut content = String::new();
        for _ in 0..p.items_per_file {
            g.item(&mut content, 0);
        }
        let file_pc = if g.rng.random_bool(0.25) { format!("defined({})", g.opt()) } else { "1".to_string() };
        files.push(GenFile { path: format!("src/file{f}.c"), file_pc, content });
    }
    GenCorpus { options, files }
}

pub fn scan_corpus(c: &GenCorpus) -> Vec<ScannedSource> {
    let stop = Stoplist::default();
    c.files
        .iter()
        .map(|f| {
            let pc: PresenceCondition = f.file_pc.parse().unwrap();
            scan_source(&SourceFile::new(f.path.clone(), f.content.clone()).with_pc(pc), &stop)
                .unwrap_or_else(|e| panic!("{}: {e}\n{}", f.path, f.content))
        })
        .collect()
}

pub fn assignment(options: &[String], bits: u32) -> ConfigAssignment {
    let mut cfg = ConfigAssignment::with_default(false);
    for (i, o) in options.iter().enumerate() {
        cfg.set(OptionName::new(o.clone()).unwrap(), bits >> i & 1 == 1);
    }
    cfg
}

pub type Fn2 = (String, String);

/// Call graph of one configuration from preprocessed text: nodes are
/// `(file, name)`, calls resolve by name to whatever is defined.
pub fn oracle_call_graph(c: &GenCorpus, bits: u32) -> (BTreeSet<Fn2>, BTreeSet<(Fn2, Fn2)>) {
    let env = |name: &str| c.options.iter().position(|o| o == name).is_some_and(|i| bits >> i & 1 == 1);
    let header = Regex::new(r"^(?:static )?(?:int|long|void) ([A-Za-z_]\w*)\(int x\)").unwrap();
    let call = Regex::new(r"([A-Za-z_]\w*)\s*\(").unwrap();
    let keywords = ["if", "while", "for", "return", "switch", "sizeof"];
    let mut defs: BTreeMap<String, Fn2> = BTreeMap::new();
    let mut calls: Vec<(Fn2, String)> = Vec::new();
    for f in &c.files {
        if !eval_if(&f.file_pc, &env) {
            continue;
        }
        let text = preprocess(&f.content, &env);
        let mut depth = 0i32;
        let mut current: Option<Fn2> = None;
        for line in text.lines() {
            if depth == 0 {
                if let Some(caps) = header.captures(line) {
                    let key = (f.path.clone(), caps[1].to_string());
                    assert!(defs.insert(caps[1].to_string(), key.clone()).is_none(), "name defined twice");
                    current = Some(key);
                }
            } else if let Some(cur) = &current {
                for caps in call.captures_iter(line) {
                    if !keywords.contains(&&caps[1]) {
                        calls.push((cur.clone(), caps[1].to_string()));
                    }
                }
            }
            depth += line.matches('{').count() as i32 - line.matches('}').count() as i32;
            if depth == 0 && !line.trim().is_empty() && line.contains('}') {
                current = None;
            }
        }
        assert_eq!(depth, 0);
    }
    let nodes: BTreeSet<Fn2> = defs.values().cloned().collect();
    let edges = calls.into_iter().filter_map(|(from, callee)| Some((from, defs.get(&callee)?.clone()))).collect();
    (nodes, edges)
}

/// Distinct option names in a rendered presence condition.
pub fn rendered_option_count(pc_text: &str) -> usize {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"defined\(([A-Za-z_]\w*)\)").unwrap());
    re.captures_iter(pc_text).map(|c| c[1].to_string()).collect::<BTreeSet<_>>().len()
}

// ---------------------------------------------------------------------------
// Graph oracles

/// Strongly connected: a random Hamiltonian cycle plus extra edges, weights
/// in 1..=9, at most one edge per ordered pair.
pub fn random_strong_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, u32)> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        pairs.insert((order[i], order[(i + 1) % n]));
    }
    let extra = rng.random_range(0..=2 * n);
    for _ in 0..extra {
        pairs.insert((rng.random_range(0..n), rng.random_range(0..n)));
    }
    pairs.into_iter().map(|(u, v)| (u, v, rng.random_range(1..=9))).collect()
}

/// Arbitrary digraph (may be disconnected, may contain self-loops).
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, u32)> {
    let density = rng.random_range(0.05..0.35);
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(if u == v { 0.03 } else { density }) {
                out.push((u, v, rng.random_range(1..=6)));
            }
        }
    }
    out
}

/// Dominant eigenvector of the in-weighted adjacency by dense power
/// iteration on `(A^T + 3I)` from a random positive start, max-normalized.
pub fn eigen_oracle(rng: &mut ChaCha8Rng, n: usize, edges: &[(usize, usize, u32)]) -> Vec<f64> {
    let mut m = vec![vec![0.0f64; n]; n];
    for &(u, v, w) in edges {
        m[v][u] += w as f64;
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += 3.0;
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    for _ in 0..200_000 {
        let y: Vec<f64> = m.iter().map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let max = y.iter().cloned().fold(0.0, f64::max);
        let y: Vec<f64> = y.iter().map(|v| v / max).collect();
        let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if change < 1e-15 {
            break;
        }
    }
    x
}

type Q = Ratio<u64>;

/// Betweenness by enumerating every shortest path explicitly, with exact
/// rational lengths (`1/w` when `inverse`, else `w`).
pub fn betweenness_oracle(n: usize, edges: &[(usize, usize, u32)], inverse: bool) -> Vec<f64> {
    let len = |w: u32| if inverse { Q::new(1, w as u64) } else { Q::from_integer(w as u64) };
    let mut adj: Vec<Vec<(usize, Q)>> = vec![Vec::new(); n];
    let mut dist: Vec<Vec<Option<Q>>> = vec![vec![None; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = Some(Q::zero());
    }
    for &(u, v, w) in edges {
        if u == v {
            continue;
        }
        adj[u].push((v, len(w)));
        let l = len(w);
        if dist[u][v].is_none_or(|d| l < d) {
            dist[u][v] = Some(l);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (dist[i][k], dist[k][j]) {
                    if dist[i][j].is_none_or(|d| a + b < d) {
                        dist[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            let Some(target) = dist[s][t] else { continue };
            if s == t {
                continue;
            }
            // every path from s whose prefix stays tight
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![(s, Q::zero(), vec![s])];
            while let Some((u, d, path)) = stack.pop() {
                if u == t {
                    paths.push(path);
                    continue;
                }
                for &(v, l) in &adj[u] {
                    let nd = d + l;
                    if Some(nd) == dist[s][v] && dist[v][t].is_some_and(|rest| nd + rest == target) {
                        let mut p = path.clone();
                        p.push(v);
                        stack.push((v, nd, p));
                    }
                }
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / total;
                }
            }
        }
    }
    bc
}

// ---------------------------------------------------------------------------
// Planted-effect corpus for end-to-end runs

pub struct PlantedCorpus {
    pub manifest: String,
    pub files: Vec<(String, String)>,
    pub cve_manifest: String,
    pub vulnerable: BTreeSet<String>,
    pub functions: usize,
}

/// `functions` functions over `files` files. Vulnerable functions carry
/// about three times as many internal `#ifdef` groups and fewer options in
/// their enclosing conditions.
pub fn planted_corpus(seed: u64, files: usize, functions: usize, vulnerable_share: f64) -> PlantedCorpus {
    let mut rng = rng(seed);
    let options: Vec<String> = (0..24).map(|i| format!("CONFIG_F{i}")).collect();
    let per_file = functions.div_ceil(files);
    let mut sources = Vec::new();
    let mut vulnerable = BTreeSet::new();
    let mut hits: Vec<(String, usize, String)> = Vec::new();
    let mut made = 0;
    for f in 0..files {
        let path = format!("drivers/part{f}.c");
        let mut text = String::new();
        let mut line = 1;
        let emit = |text: &mut String, line: &mut usize, s: &str| {
            text.push_str(s);
            text.push('\n');
            *line += 1;
        };
        for k in 0..per_file {
            if made == functions {
                break;
            }
            made += 1;
            let name = format!("p{f}_{k}");
            let vuln = rng.random_bool(vulnerable_share);
            let (wrap_p, max_wrap, group_mean) = if vuln { (0.15, 1, 1.2) } else { (0.55, 3, 0.4) };
            let wrap: Vec<&String> = if rng.random_bool(wrap_p) {
                let k = rng.random_range(1..=max_wrap);
                options.choose_multiple(&mut rng, k).collect()
            } else {
                Vec::new()
            };
            if !wrap.is_empty() {
                let cond: Vec<String> = wrap.iter().map(|o| format!("defined({o})")).collect();
                emit(&mut text, &mut line, &format!("#if {}", cond.join(" && ")));
            }
            emit(&mut text, &mut line, &format!("int {name}(int x) {{"));
            let body_line = line;
            emit(&mut text, &mut line, "  int y = x;");
            // groups ~ Poisson(group_mean) via 6 Bernoulli trials
            let groups = (0..6).filter(|_| rng.random_bool(group_mean / 6.0)).count();
            for _ in 0..groups {
                let o = options.choose(&mut rng).unwrap();
                emit(&mut text, &mut line, &format!("#ifdef {o}"));
                if rng.random_bool(0.5) {
                    let o2 = options.choose(&mut rng).unwrap();
                    emit(&mut text, &mut line, &format!("#if defined({o2})"));
                    emit(&mut text, &mut line, "  y += 2;");
                    emit(&mut text, &mut line, "#endif");
                }
                emit(&mut text, &mut line, "  y += 1;");
                emit(&mut text, &mut line, "#endif");
            }
            for _ in 0..rng.random_range(0..3) {
                let callee = format!("p{}_{}", rng.random_range(0..files), rng.random_range(0..per_file));
                emit(&mut text, &mut line, &format!("  y += {callee}(y);"));
            }
            emit(&mut text, &mut line, "  return y;");
            emit(&mut text, &mut line, "}");
            if !wrap.is_empty() {
                emit(&mut text, &mut line, "#endif");
            }
            emit(&mut text, &mut line, "");
            if vuln {
                vulnerable.insert(name.clone());
                hits.push((path.clone(), body_line, name));
            }
        }
        sources.push((path, text));
    }
    let mut cves = Vec::new();
    for (i, chunk) in hits.chunks(3).enumerate() {
        let files: Vec<serde_json::Value> = chunk
            .iter()
            .map(|(path, line, _)| {
                serde_json::json!({
                    "path": path,
                    "diff": format!("@@ -{line},1 +{line},1 @@\n-  int y = 0;\n+  int y = x;\n"),
                })
            })
            .collect();
        cves.push(serde_json::json!({
            "cve_id": format!("CVE-2019-{:05}", 1000 + i),
            "commits": [{"commit_id": format!("c{i:04x}"), "message": "fix", "files": files}],
        }));
    }
    let manifest: Vec<serde_json::Value> = sources.iter().map(|(p, _)| serde_json::json!({"path": p})).collect();
    PlantedCorpus {
        manifest: serde_json::to_string_pretty(&manifest).unwrap(),
        files: sources,
        cve_manifest: serde_json::to_string_pretty(&cves).unwrap(),
        vulnerable,
        functions: made,
    }
}

impl PlantedCorpus {
    pub fn write(&self, dir: &Path) {
        for (p, text) in &self.files {
            let full = dir.join(p);
            std::fs::create_dir_all(full.parent().unwrap()).unwrap();
            std::fs::write(full, text).unwrap();
        }
        std::fs::write(dir.join("manifest.json"), &self.manifest).unwrap();
        std::fs::write(dir.join("cves.json"), &self.cve_manifest).unwrap();
    }
}

impl GenCorpus {
    /// Write sources and a manifest (`manifest.json`) under `dir`.
    pub fn write(&self, dir: &Path) {
        let mut entries = Vec::new();
        for f in &self.files {
            let full = dir.join(&f.path);
            std::fs::create_dir_all(full.parent().unwrap()).unwrap();
            std::fs::write(full, &f.content).unwrap();
            entries.push(serde_json::json!({"path": f.path, "file_pc": f.file_pc}));
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&entries).unwrap()).unwrap();
    }
}
