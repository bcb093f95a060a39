//! Variational call graph: every function and call of every configuration,
//! each labeled with its presence condition.
//!
//! Calls resolve by name across the whole corpus. A call from `f` to `g`
//! becomes an edge candidate with condition `pc(f) && local && pc(g)`;
//! candidates for the same ordered pair merge by disjunction. Edge weight is
//! one plus the number of distinct options in the merged condition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cparse::ScannedSource;
use crate::pcalg::{
    evaluate, is_satisfiable, option_count, pc_and, pc_or, ConfigAssignment, PcError, PresenceCondition,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("condition of {element}: {source}")]
    Condition { element: String, source: PcError },
    #[error("invalid graph document: {0}")]
    Schema(String),
    #[error("edge {from} -> {to} references unknown node {missing}")]
    UnknownNode { from: String, to: String, missing: String },
    #[error("edge {from} -> {to} has weight {weight}, expected {expected}")]
    WeightMismatch { from: String, to: String, weight: u32, expected: u32 },
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("{0} has an unsatisfiable condition")]
    Unsatisfiable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcgNode {
    pub id: String,
    pub name: String,
    pub file: String,
    pub pc: PresenceCondition,
    pub size_loc: usize,
    #[serde(rename = "internal_ifdefs")]
    pub internal_ifdef_count: usize,
    #[serde(rename = "internal_options")]
    pub internal_option_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcgEdge {
    pub from: String,
    pub to: String,
    pub pc: PresenceCondition,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnresolvedCall {
    pub from: String,
    pub callee: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariationalCallGraph {
    pub nodes: BTreeMap<String, VcgNode>,
    /// Sorted by `(from, to)`; at most one edge per pair.
    pub edges: Vec<VcgEdge>,
    pub unresolved: Vec<UnresolvedCall>,
}

/// Plain call graph of one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
    pub config: ConfigAssignment,
}

pub fn edge_weight(pc: &PresenceCondition) -> u32 {
    1 + option_count(pc) as u32
}

fn satisfiable(pc: &PresenceCondition, element: impl FnOnce() -> String) -> Result<bool, GraphError> {
    is_satisfiable(pc).map_err(|source| GraphError::Condition { element: element(), source })
}

pub fn build(corpus: &[ScannedSource]) -> Result<VariationalCallGraph, GraphError> {
    let mut g = VariationalCallGraph::default();
    let mut seen_files = BTreeSet::new();
    let mut by_name: BTreeMap<&str, Vec<String>> = BTreeMap::new();

    for src in corpus {
        if !seen_files.insert(src.path.as_str()) {
            return Err(GraphError::DuplicateNode(format!("{}::*", src.path)));
        }
        for f in &src.functions {
            let pc = pc_and(src.file_pc.clone(), f.def_pc.clone());
            if !satisfiable(&pc, || f.id.clone())? {
                continue;
            }
            if g.nodes.contains_key(&f.id) {
                return Err(GraphError::DuplicateNode(f.id.clone()));
            }
            by_name.entry(f.name.as_str()).or_default().push(f.id.clone());
            g.nodes.insert(
                f.id.clone(),
                VcgNode {
                    id: f.id.clone(),
                    name: f.name.clone(),
                    file: src.path.clone(),
                    pc,
                    size_loc: f.size_loc,
                    internal_ifdef_count: f.internal_ifdef_count,
                    internal_option_count: f.internal_options.len(),
                },
            );
        }
    }

    let mut merged: BTreeMap<(String, String), PresenceCondition> = BTreeMap::new();
    for src in corpus {
        for f in &src.functions {
            let Some(caller) = g.nodes.get(&f.id) else { continue };
            for call in &f.call_sites {
                let Some(targets) = by_name.get(call.callee_name.as_str()) else {
                    g.unresolved.push(UnresolvedCall {
                        from: f.id.clone(),
                        callee: call.callee_name.clone(),
                        line: call.line,
                    });
                    continue;
                };
                let site_pc = pc_and(caller.pc.clone(), call.local_pc.clone());
                for target in targets {
                    let candidate = pc_and(site_pc.clone(), g.nodes[target].pc.clone());
                    if !satisfiable(&candidate, || format!("call {} -> {target} at line {}", f.id, call.line))? {
                        continue;
                    }
                    let key = (f.id.clone(), target.clone());
                    let pc = match merged.remove(&key) {
                        Some(prev) => pc_or(prev, candidate),
                        None => candidate,
                    };
                    merged.insert(key, pc);
                }
            }
        }
    }
    g.edges = merged.into_iter().map(|((from, to), pc)| VcgEdge { weight: edge_weight(&pc), from, to, pc }).collect();
    g.unresolved.sort();
    Ok(g)
}

pub fn project(g: &VariationalCallGraph, cfg: &ConfigAssignment) -> ProjectedGraph {
    let nodes: BTreeSet<String> = g.nodes.values().filter(|n| evaluate(&n.pc, cfg)).map(|n| n.id.clone()).collect();
    let edges = g
        .edges
        .iter()
        .filter(|e| nodes.contains(&e.from) && nodes.contains(&e.to) && evaluate(&e.pc, cfg))
        .map(|e| (e.from.clone(), e.to.clone()))
        .collect();
    ProjectedGraph { nodes, edges, config: cfg.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<VcgNode>,
    edges: Vec<VcgEdge>,
    unresolved: Vec<UnresolvedCall>,
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export(g: &VariationalCallGraph, format: ExportFormat) -> String {
    let mut edges: Vec<&VcgEdge> = g.edges.iter().collect();
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    match format {
        ExportFormat::Json => {
            let doc = GraphDoc {
                nodes: g.nodes.values().cloned().collect(),
                edges: edges.into_iter().cloned().collect(),
                unresolved: g.unresolved.clone(),
            };
            let mut out = serde_json::to_string_pretty(&doc).expect("graph serializes");
            out.push('\n');
            out
        }
        ExportFormat::Dot => {
            let mut out = String::from("digraph vcg {\n");
            for n in g.nodes.values() {
                let _ = writeln!(
                    out,
                    "  \"{}\" [label=\"{}\\n{}\"];",
                    dot_escape(&n.id),
                    dot_escape(&n.name),
                    dot_escape(&n.pc.render())
                );
            }
            for e in edges {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{} [w={}]\"];",
                    dot_escape(&e.from),
                    dot_escape(&e.to),
                    dot_escape(&e.pc.render()),
                    e.weight
                );
            }
            out.push_str("}\n");
            out
        }
    }
}

/// Parse and validate a graph JSON document.
pub fn import_json(text: &str) -> Result<VariationalCallGraph, GraphError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Schema(e.to_string()))?;
    let mut g = VariationalCallGraph::default();
    for n in doc.nodes {
        if !satisfiable(&n.pc, || format!("node {}", n.id))? {
            return Err(GraphError::Unsatisfiable(format!("node {}", n.id)));
        }
        if g.nodes.contains_key(&n.id) {
            return Err(GraphError::DuplicateNode(n.id));
        }
        g.nodes.insert(n.id.clone(), n);
    }
    let mut pairs = BTreeSet::new();
    for e in doc.edges {
        for end in [&e.from, &e.to] {
            if !g.nodes.contains_key(end) {
                return Err(GraphError::UnknownNode { from: e.from.clone(), to: e.to.clone(), missing: end.clone() });
            }
        }
        let expected = edge_weight(&e.pc);
        if e.weight != expected {
            return Err(GraphError::WeightMismatch { from: e.from, to: e.to, weight: e.weight, expected });
        }
        if !satisfiable(&e.pc, || format!("edge {} -> {}", e.from, e.to))? {
            return Err(GraphError::Unsatisfiable(format!("edge {} -> {}", e.from, e.to)));
        }
        if !pairs.insert((e.from.clone(), e.to.clone())) {
            return Err(GraphError::DuplicateEdge { from: e.from, to: e.to });
        }
        g.edges.push(e);
    }
    g.edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    for u in &doc.unresolved {
        if !g.nodes.contains_key(&u.from) {
            return Err(GraphError::Schema(format!("unresolved call from unknown node {}", u.from)));
        }
    }
    g.unresolved = doc.unresolved;
    g.unresolved.sort();
    Ok(g)
}
