use std::collections::VecDeque;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Maximum of `|E(S)| / |S|` over nonempty vertex sets, with a maximiser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensestSubgraph {
    /// Exact density in lowest terms.
    pub density: Ratio<u64>,
    /// Sorted maximising vertex set.
    pub witness: Vec<usize>,
    /// `|E(witness)|`.
    pub edges: usize,
}

impl DensestSubgraph {
    pub fn density_f64(&self) -> f64 {
        *self.density.numer() as f64 / *self.density.denom() as f64
    }

    /// Whether every vertex set spans at most `(1 + delta)|S|` edges.
    pub fn is_sparse(&self, delta: f64) -> bool {
        self.edges as f64 <= (1.0 + delta) * self.witness.len() as f64
    }
}

/// Densest subgraph of the whole graph.
pub fn densest_subgraph(g: &Graph) -> Result<DensestSubgraph> {
    let all: Vec<usize> = (0..g.n()).collect();
    densest_subgraph_of(g, &all)
}

/// Densest subgraph among the subsets of `vertices` (edges induced by `g`).
///
/// Dinkelbach iteration over Goldberg's cut network: for a guess `p/q` the
/// minimum cut is `q m n + 2 min_S (p|S| - q|E(S)|)`, and the source side of
/// a minimum cut is a strictly denser set whenever the guess is not optimal.
pub fn densest_subgraph_of(g: &Graph, vertices: &[usize]) -> Result<DensestSubgraph> {
    if vertices.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (h, labels) = g.induced_subgraph(vertices);
    let n = h.n();
    let m = h.edge_count() as i64;
    let mut best: Vec<usize> = (0..n).collect();
    let mut best_edges = h.edge_count();
    if m > 0 {
        loop {
            let (p, q) = (best_edges as i64, best.len() as i64);
            let cut = goldberg_source_side(&h, p, q);
            let members: Vec<usize> = (0..n).filter(|&v| cut[v]).collect();
            let e = h.induced_edge_count(&members);
            if members.is_empty() || q * e as i64 <= p * members.len() as i64 {
                break;
            }
            best = members;
            best_edges = e;
        }
    }
    let mut witness: Vec<usize> = best.into_iter().map(|v| labels[v]).collect();
    witness.sort_unstable();
    Ok(DensestSubgraph {
        density: Ratio::new(best_edges as u64, witness.len() as u64),
        witness,
        edges: best_edges,
    })
}

/// Membership of each vertex in the source side of a minimum cut of the
/// network for guess `p/q`.
fn goldberg_source_side(h: &Graph, p: i64, q: i64) -> Vec<bool> {
    let n = h.n();
    let m = h.edge_count() as i64;
    let (s, t) = (n, n + 1);
    let mut net = Dinic::new(n + 2);
    for v in 0..n {
        net.add_edge(s, v, q * m, 0);
        net.add_edge(v, t, q * m + 2 * p - q * h.degree(v) as i64, 0);
    }
    for &(u, v) in h.edges() {
        net.add_edge(u, v, q, q);
    }
    net.max_flow(s, t);
    let reach = net.residual_reachable(s);
    reach[..n].to_vec()
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Arc `u -> v` with capacity `c`, paired with `v -> u` of capacity `back`.
    fn add_edge(&mut self, u: usize, v: usize, c: i64, back: i64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(back);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: i64) -> i64 {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e]));
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}
