use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Graph;

/// Edge-metric distance: a non-negative integer or `+inf` between
/// components. Serialises as a JSON number or `null`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distance(u32);

impl Distance {
    pub const INFINITE: Distance = Distance(u32::MAX);
    pub const ZERO: Distance = Distance(0);

    pub fn finite(d: u32) -> Self {
        debug_assert!(d != u32::MAX);
        Distance(d)
    }

    pub fn is_finite(self) -> bool {
        self.0 != u32::MAX
    }

    pub fn value(self) -> Option<u32> {
        self.is_finite().then_some(self.0)
    }

    /// `+inf` maps to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.value().map_or(f64::INFINITY, f64::from)
    }
}

impl fmt::Debug for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(d) => write!(f, "{d}"),
            None => write!(f, "inf"),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Option::<u32>::deserialize(d)?.map_or(Distance::INFINITE, Distance))
    }
}

/// Single-source BFS distances.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<Distance> {
    multi_source_distances(g, &[source])
}

/// Distance from every vertex to the nearest member of `sources`
/// (all `+inf` when `sources` is empty).
pub fn multi_source_distances(g: &Graph, sources: &[usize]) -> Vec<Distance> {
    let mut dist = vec![Distance::INFINITE; g.n()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if !dist[s].is_finite() {
            dist[s] = Distance::ZERO;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let next = Distance(dist[u].0 + 1);
        for &w in g.neighbors(u) {
            if !dist[w].is_finite() {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs shortest-path table of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricTable {
    n: usize,
    dist: Vec<Distance>,
}

impl MetricTable {
    /// One BFS per vertex.
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n();
        let mut dist = Vec::with_capacity(n * n);
        for s in 0..n {
            dist.extend(bfs_distances(g, s));
        }
        MetricTable { n, dist }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> Distance {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[Distance] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    /// `+inf` for disconnected graphs, `0` for graphs with at most one vertex.
    pub fn diameter(&self) -> Distance {
        self.dist.iter().copied().max().unwrap_or(Distance::ZERO)
    }

    /// Lexicographically first pair realising the diameter.
    pub fn diameter_pair(&self) -> Option<(usize, usize)> {
        let diam = self.diameter();
        (0..self.n * self.n)
            .find(|&k| self.dist[k] == diam)
            .map(|k| (k / self.n, k % self.n))
    }

    /// Closed ball `B(x; r)` in increasing vertex order.
    pub fn ball(&self, x: usize, r: u32) -> Vec<usize> {
        self.row(x)
            .iter()
            .enumerate()
            .filter(|(_, d)| d.value().is_some_and(|d| d <= r))
            .map(|(y, _)| y)
            .collect()
    }

    /// `d(x, set)`; `+inf` for the empty set.
    pub fn distance_to_set(&self, x: usize, set: &[usize]) -> Distance {
        set.iter()
            .map(|&y| self.get(x, y))
            .min()
            .unwrap_or(Distance::INFINITE)
    }

    /// `min d(a, b)` over `a in first`, `b in second`.
    pub fn set_distance(&self, first: &[usize], second: &[usize]) -> Distance {
        first
            .iter()
            .map(|&a| self.distance_to_set(a, second))
            .min()
            .unwrap_or(Distance::INFINITE)
    }

    /// Diameter of a vertex subset under this metric.
    pub fn set_diameter(&self, set: &[usize]) -> Distance {
        let mut best = Distance::ZERO;
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                best = best.max(self.get(a, b));
            }
        }
        best
    }

    /// Geodesic from `x` to `y` (inclusive). Each step back from `y` moves
    /// to the smallest-labelled neighbour one step closer to `x`.
    pub fn geodesic(&self, g: &Graph, x: usize, y: usize) -> Option<Vec<usize>> {
        let total = self.get(x, y).value()?;
        let mut path = vec![y];
        let mut cur = y;
        for step in (0..total).rev() {
            cur = *g
                .neighbors(cur)
                .iter()
                .find(|&&w| self.get(x, w) == Distance(step))
                .expect("BFS layers are consistent");
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Symmetry, zero diagonal, triangle inequality and `d = 1` exactly on
    /// edges. Returns the first violation found.
    pub fn validate_against(&self, g: &Graph) -> Result<(), String> {
        let n = self.n;
        for x in 0..n {
            if self.get(x, x) != Distance::ZERO {
                return Err(format!("d({x},{x}) != 0"));
            }
            for y in 0..n {
                if self.get(x, y) != self.get(y, x) {
                    return Err(format!("asymmetric at ({x},{y})"));
                }
                if (self.get(x, y) == Distance(1)) != g.has_edge(x, y) {
                    return Err(format!("d({x},{y}) = 1 disagrees with adjacency"));
                }
                for z in 0..n {
                    let (a, b, c) = (self.get(x, z), self.get(x, y), self.get(y, z));
                    if b.is_finite() && c.is_finite() && a.0 > b.0 + c.0 {
                        return Err(format!("triangle inequality fails at ({x},{y},{z})"));
                    }
                }
            }
        }
        Ok(())
    }
}
