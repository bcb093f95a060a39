//! Weighted directed centralities over an indexed graph.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::vargraph::{ProjectedGraph, VariationalCallGraph};

pub const EIGEN_TOLERANCE: f64 = 1e-12;
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CentralityError {
    #[error("edge weight must be at least 1")]
    ZeroWeight,
    #[error("edge weights have no common multiple representable in 64 bits")]
    WeightScaleOverflow,
}

/// Graph with dense node indices; edges are `(from, to, weight)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Digraph {
    pub ids: Vec<String>,
    pub edges: Vec<(usize, usize, u32)>,
}

impl Digraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, u32)>) -> Self {
        Digraph { ids: (0..n).map(|i| i.to_string()).collect(), edges }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Configuration-weighted graph: every node, edge weights from conditions.
    pub fn weighted(g: &VariationalCallGraph) -> Self {
        let index: BTreeMap<&str, usize> = g.nodes.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        Digraph {
            ids: g.nodes.keys().cloned().collect(),
            edges: g.edges.iter().map(|e| (index[e.from.as_str()], index[e.to.as_str()], e.weight)).collect(),
        }
    }

    /// Unit-weight graph of one projected configuration.
    pub fn unweighted(p: &ProjectedGraph) -> Self {
        let index: BTreeMap<&str, usize> = p.nodes.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        Digraph {
            ids: p.nodes.iter().cloned().collect(),
            edges: p.edges.iter().map(|(f, t)| (index[f.as_str()], index[t.as_str()], 1)).collect(),
        }
    }
}

/// In- and out-strength (sum of incident edge weights). Self-loops count
/// toward both.
pub fn strengths(g: &Digraph) -> (Vec<u64>, Vec<u64>) {
    let mut din = vec![0u64; g.len()];
    let mut dout = vec![0u64; g.len()];
    for &(u, v, w) in &g.edges {
        dout[u] += w as u64;
        din[v] += w as u64;
    }
    (din, dout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// The graph has no directed cycle (its adjacency matrix is nilpotent),
    /// so there is no positive dominant eigenvalue: all scores are zero.
    pub degenerate: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Eigenvector centrality by power iteration on incoming weighted sums.
///
/// Iterates `x <- x + A^T x` (an identity shift that leaves the eigenvectors
/// unchanged but breaks periodic oscillation on cyclic graphs), rescaling to
/// a maximum of 1 each step, until the largest component change drops below
/// [`EIGEN_TOLERANCE`] or [`EIGEN_MAX_ITERATIONS`] is reached. Acyclic
/// graphs (including edgeless ones) are degenerate and score zero.
pub fn eigenvector(g: &Digraph) -> EigenResult {
    let n = g.len();
    if !has_cycle(g) {
        return EigenResult { values: vec![0.0; n], degenerate: true, converged: true, iterations: 0 };
    }
    let mut x = vec![1.0f64; n];
    let mut next = vec![0.0f64; n];
    for it in 1..=EIGEN_MAX_ITERATIONS {
        next.copy_from_slice(&x);
        for &(u, v, w) in &g.edges {
            next[v] += w as f64 * x[u];
        }
        let max = next.iter().cloned().fold(0.0f64, f64::max);
        let mut change = 0.0f64;
        for (cur, new) in x.iter_mut().zip(next.iter()) {
            let scaled = new / max;
            change = change.max((scaled - *cur).abs());
            *cur = scaled;
        }
        if change < EIGEN_TOLERANCE {
            return EigenResult { values: x, degenerate: false, converged: true, iterations: it };
        }
    }
    EigenResult { values: x, degenerate: false, converged: false, iterations: EIGEN_MAX_ITERATIONS }
}

/// Kahn's algorithm; self-loops count as cycles.
fn has_cycle(g: &Digraph) -> bool {
    let n = g.len();
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v, _) in &g.edges {
        indeg[v] += 1;
        out[u].push(v);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = 0;
    while let Some(u) = ready.pop() {
        removed += 1;
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    removed < n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Edge length `1 / weight`: complex edges are shorter.
    #[default]
    Inverse,
    /// Edge length `weight`.
    Direct,
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inverse" => Ok(DistanceMode::Inverse),
            "direct" => Ok(DistanceMode::Direct),
            other => Err(format!("unknown betweenness mode {other:?} (expected inverse or direct)")),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Integer edge lengths. Inverse lengths are scaled by the least common
/// multiple of the weights so that path comparisons stay exact.
fn edge_lengths(g: &Digraph, mode: DistanceMode) -> Result<Vec<u64>, CentralityError> {
    if g.edges.iter().any(|e| e.2 == 0) {
        return Err(CentralityError::ZeroWeight);
    }
    match mode {
        DistanceMode::Direct => Ok(g.edges.iter().map(|e| e.2 as u64).collect()),
        DistanceMode::Inverse => {
            let mut scale = 1u64;
            for &(_, _, w) in &g.edges {
                let w = w as u64;
                scale = (scale / gcd(scale, w)).checked_mul(w).ok_or(CentralityError::WeightScaleOverflow)?;
            }
            // path sums must not overflow either
            (scale as u128 * g.len().max(1) as u128 <= u64::MAX as u128)
                .then_some(())
                .ok_or(CentralityError::WeightScaleOverflow)?;
            Ok(g.edges.iter().map(|e| scale / e.2 as u64).collect())
        }
    }
}

/// Directed node betweenness (unnormalized, endpoints excluded) by Brandes'
/// dependency accumulation over Dijkstra searches. Self-loops never lie on
/// shortest paths and are ignored.
pub fn betweenness(g: &Digraph, mode: DistanceMode) -> Result<Vec<f64>, CentralityError> {
    let n = g.len();
    let lengths = edge_lengths(g, mode)?;
    let mut out: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (&(u, v, _), &len) in g.edges.iter().zip(&lengths) {
        if u != v {
            out[u].push((v, len));
        }
    }
    let mut bc = vec![0.0f64; n];
    let mut dist = vec![u64::MAX; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    for s in 0..n {
        dist.fill(u64::MAX);
        sigma.fill(0.0);
        delta.fill(0.0);
        done.fill(false);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();
        dist[s] = 0;
        sigma[s] = 1.0;
        heap.push(Reverse((0u64, s)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            order.push(v);
            for &(w, len) in &out[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    sigma[w] = sigma[v];
                    preds[w].clear();
                    preds[w].push(v);
                    heap.push(Reverse((nd, w)));
                } else if nd == dist[w] && !done[w] {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    Ok(bc)
}
