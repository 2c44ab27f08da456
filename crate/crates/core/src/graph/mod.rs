//! Simple undirected graphs on `0..n` and the combinatorial machinery built on
//! them: edge metrics, short cycles, densest subgraphs and expansion.

mod cycles;
mod density;
mod metric;
mod spectral;

pub use cycles::{
    count_cycles_by_length, enumerate_cycles, enumerate_short_cycles, girth, CycleSet,
};
pub use density::{densest_subgraph, densest_subgraph_of, DensestSubgraph};
pub use metric::{bfs_distances, multi_source_distances, Distance, MetricTable};
pub use spectral::{
    adjacency_matrix, edge_boundary_ratio, edge_boundary_ratio_with_limit, spectral_gap, sweep_cut,
    ExpansionKind, ExpansionResult, EXACT_EXPANSION_LIMIT,
};

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph on the vertices `0..n`.
///
/// Edges are kept in the order they were supplied so that parsing and
/// serialising an edge list is an exact round trip; adjacency lists are
/// sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<usize>>,
    declared_degree: Option<usize>,
}

/// Result of parsing an edge-list document.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub graph: Graph,
    /// Duplicate edges that were dropped (only in lenient mode).
    pub warnings: Vec<String>,
}

impl Graph {
    /// Builds a graph, rejecting loops, out-of-range endpoints and duplicate
    /// edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (u, v) in edges {
            check_edge(n, u, v)?;
            if !seen.insert(key(u, v)) {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
            list.push((u, v));
        }
        Ok(Self::assemble(n, list))
    }

    fn assemble(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            adj,
            declared_degree: None,
        }
    }

    /// Declares the graph `d`-regular, checking every degree.
    pub fn with_declared_degree(mut self, d: usize) -> Result<Self> {
        if let Some((vertex, degree)) = self
            .adj
            .iter()
            .map(Vec::len)
            .enumerate()
            .find(|&(_, k)| k != d)
        {
            return Err(Error::NotRegular {
                vertex,
                degree,
                expected: d,
            });
        }
        self.declared_degree = Some(d);
        Ok(self)
    }

    /// Restores the adjacency lists after deserialisation.
    pub fn rebuild(self) -> Result<Self> {
        let declared = self.declared_degree;
        let g = Self::from_edges(self.n, self.edges)?;
        match declared {
            Some(d) => g.with_declared_degree(d),
            None => Ok(g),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges as `(min, max)` pairs in lexicographic order.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edges.iter().map(|&(u, v)| key(u, v)).collect();
        e.sort_unstable();
        e
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn declared_degree(&self) -> Option<usize> {
        self.declared_degree
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        bfs_distances(self, 0).iter().all(|d| d.is_finite())
    }

    /// Number of edges with both endpoints in `set`.
    pub fn induced_edge_count(&self, set: &[usize]) -> usize {
        let mut member = vec![false; self.n];
        for &v in set {
            member[v] = true;
        }
        self.edges
            .iter()
            .filter(|&&(u, v)| member[u] && member[v])
            .count()
    }

    /// Number of edges with exactly one endpoint in `set`.
    pub fn boundary_size(&self, set: &[usize]) -> usize {
        let mut member = vec![false; self.n];
        for &v in set {
            member[v] = true;
        }
        self.edges
            .iter()
            .filter(|&&(u, v)| member[u] != member[v])
            .count()
    }

    /// Induced subgraph on `vertices` (relabelled `0..k` in the given order)
    /// together with the label map.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let edges: Vec<_> = self
            .sorted_edges()
            .into_iter()
            .filter(|&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|(u, v)| (index[u], index[v]))
            .collect();
        (Self::assemble(vertices.len(), edges), vertices.to_vec())
    }

    /// Same vertex set with the listed edges removed.
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Graph {
        let drop: BTreeSet<_> = removed.iter().map(|&(u, v)| key(u, v)).collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| !drop.contains(&key(u, v)))
            .collect();
        Self::assemble(self.n, edges)
    }

    /// Canonical edge-list document: header `n m`, then one `u v` line per
    /// edge, LF-terminated.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(8 * (self.edges.len() + 1));
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

fn check_edge(n: usize, u: usize, v: usize) -> Result<()> {
    for w in [u, v] {
        if w >= n {
            return Err(Error::VertexOutOfRange { vertex: w, n });
        }
    }
    if u == v {
        return Err(Error::Loop(u));
    }
    Ok(())
}

/// Parses an edge-list document. In strict mode duplicate edges are an
/// error; otherwise they are dropped with a warning.
pub fn parse_graph(text: &str, strict: bool) -> Result<Parsed> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let (n, m) = parse_pair(header, hline + 1)?;
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    let mut warnings = Vec::new();
    let mut count = 0;
    for (idx, line) in lines {
        count += 1;
        if count > m {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("more than the declared {m} edges"),
            });
        }
        let (u, v) = parse_pair(line, idx + 1)?;
        check_edge(n, u, v)?;
        if !seen.insert(key(u, v)) {
            if strict {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
            warnings.push(format!(
                "line {}: duplicate edge {{{u}, {v}}} dropped",
                idx + 1
            ));
            continue;
        }
        edges.push((u, v));
    }
    if count < m {
        return Err(Error::Parse {
            line: hline + 1,
            message: format!("declared {m} edges, found {count}"),
        });
    }
    Ok(Parsed {
        graph: Graph::assemble(n, edges),
        warnings,
    })
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let bad = |msg: &str| Error::Parse {
        line: lineno,
        message: format!("{msg}: {line:?}"),
    };
    let a = it.next().ok_or_else(|| bad("expected two integers"))?;
    let b = it.next().ok_or_else(|| bad("expected two integers"))?;
    if it.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    let a = a.parse().map_err(|_| bad("not a non-negative integer"))?;
    let b = b.parse().map_err(|_| bad("not a non-negative integer"))?;
    Ok((a, b))
}

/// Small graph families used throughout the tests, examples and CLI.
pub mod families {
    use super::Graph;

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3);
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
    }

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, edges).expect("Petersen graph is simple")
    }

    /// Triangles `{0,1,2}` and `{3,4,5}` joined by a path of `len` edges from
    /// vertex 2 to vertex 3 (`len - 1` new internal vertices).
    pub fn two_triangles_with_path(len: usize) -> Graph {
        assert!(len >= 1);
        let n = 6 + len - 1;
        let mut edges = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        let mut prev = 2;
        for k in 0..len - 1 {
            edges.push((prev, 6 + k));
            prev = 6 + k;
        }
        edges.push((prev, 3));
        Graph::from_edges(n, edges).expect("planted graph is simple")
    }

    /// Triangles `{0,1,2}` and `{0,3,4}` sharing vertex 0.
    pub fn bowtie() -> Graph {
        Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4)])
            .expect("bowtie is simple")
    }

    /// Two triangles sharing the edge `{1, 2}`.
    pub fn diamond() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).expect("diamond is simple")
    }

    /// Disjoint union (second graph relabelled after the first).
    pub fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
        let off = a.n();
        let edges = a
            .edges()
            .iter()
            .copied()
            .chain(b.edges().iter().map(|&(u, v)| (u + off, v + off)));
        Graph::from_edges(a.n() + b.n(), edges).expect("union of simple graphs is simple")
    }
}
