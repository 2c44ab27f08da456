use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// The short cycles of a graph: one witnessing cyclic order per vertex set
/// that supports a cycle of length `< threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSet {
    threshold: usize,
    cycles: Vec<Vec<usize>>,
}

impl CycleSet {
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Witnesses, ordered by their sorted vertex sets. Each starts at its
    /// smallest vertex with the second entry smaller than the last.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Edges of the `i`-th witness as `(min, max)` pairs, sorted.
    pub fn edges_of(&self, i: usize) -> Vec<(usize, usize)> {
        cycle_edges(&self.cycles[i])
    }

    /// Sorted vertex set of the `i`-th witness.
    pub fn vertices_of(&self, i: usize) -> Vec<usize> {
        let mut v = self.cycles[i].clone();
        v.sort_unstable();
        v
    }

    pub fn min_length(&self) -> Option<usize> {
        self.cycles.iter().map(Vec::len).min()
    }
}

/// Sorted `(min, max)` edge list of a cyclic vertex sequence.
pub(crate) fn cycle_edges(cycle: &[usize]) -> Vec<(usize, usize)> {
    let k = cycle.len();
    let mut e: Vec<_> = (0..k)
        .map(|i| {
            let (a, b) = (cycle[i], cycle[(i + 1) % k]);
            (a.min(b), a.max(b))
        })
        .collect();
    e.sort_unstable();
    e
}

/// Calls `visit` once per cycle subgraph of length `<= max_len`, passing the
/// canonical cyclic order (smallest vertex first, then the smaller of its two
/// cycle neighbours).
fn for_each_cycle(g: &Graph, max_len: usize, mut visit: impl FnMut(&[usize])) {
    if max_len < 3 {
        return;
    }
    let mut on_path = vec![false; g.n()];
    let mut path = Vec::with_capacity(max_len);
    for s in 0..g.n() {
        path.push(s);
        on_path[s] = true;
        extend(g, s, max_len, &mut path, &mut on_path, &mut visit);
        on_path[s] = false;
        path.pop();
    }
}

fn extend(
    g: &Graph,
    s: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    visit: &mut impl FnMut(&[usize]),
) {
    let u = *path.last().expect("path starts at the root");
    for &w in g.neighbors(u) {
        if w == s {
            if path.len() >= 3 && path[1] < path[path.len() - 1] {
                visit(path);
            }
        } else if w > s && !on_path[w] && path.len() < max_len {
            path.push(w);
            on_path[w] = true;
            extend(g, s, max_len, path, on_path, visit);
            on_path[w] = false;
            path.pop();
        }
    }
}

/// Every cycle subgraph of length `<= max_len` in canonical order. Distinct
/// cycles on the same vertex set are all listed.
pub fn enumerate_cycles(g: &Graph, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_cycle(g, max_len, |c| out.push(c.to_vec()));
    out
}

/// `counts[r]` is the number of cycle subgraphs of length `r`, for
/// `r <= max_len`.
pub fn count_cycles_by_length(g: &Graph, max_len: usize) -> Vec<u64> {
    let mut counts = vec![0u64; max_len + 1];
    for_each_cycle(g, max_len, |c| counts[c.len()] += 1);
    counts
}

/// Vertex sets supporting a cycle of length `< t`.
pub fn enumerate_short_cycles(g: &Graph, t: usize) -> Result<CycleSet> {
    if t < 3 {
        return Err(Error::InvalidParameter(format!(
            "cycle threshold t = {t} must be at least 3"
        )));
    }
    let mut by_set: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for_each_cycle(g, t - 1, |c| {
        let mut key = c.to_vec();
        key.sort_unstable();
        by_set.entry(key).or_insert_with(|| c.to_vec());
    });
    Ok(CycleSet {
        threshold: t,
        cycles: by_set.into_values().collect(),
    })
}

/// Length of a shortest cycle; `None` for forests.
pub fn girth(g: &Graph) -> Option<usize> {
    let n = g.n();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        dist.fill(usize::MAX);
        dist[root] = 0;
        parent[root] = usize::MAX;
        queue.clear();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            if 2 * dist[u] >= best {
                break;
            }
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::super::families::*;
    use super::*;
    use proptest::prelude::*;

    /// Number of Hamiltonian cycles (up to rotation and reflection) of the
    /// subgraph induced on the bitmask `set`, by Held-Karp counting.
    fn hamiltonian_cycles(g: &Graph, set: u32) -> u64 {
        let verts: Vec<usize> = (0..32).filter(|&v| set & (1 << v) != 0).collect();
        let k = verts.len();
        if k < 3 {
            return 0;
        }
        // paths from verts[0] over subsets of the remaining k-1 vertices
        let mut ways = vec![vec![0u64; k]; 1 << k];
        ways[1][0] = 1;
        for mask in 1..(1usize << k) {
            if mask & 1 == 0 {
                continue;
            }
            for end in 0..k {
                let w = ways[mask][end];
                if w == 0 {
                    continue;
                }
                for next in 1..k {
                    if mask & (1 << next) == 0 && g.has_edge(verts[end], verts[next]) {
                        ways[mask | (1 << next)][next] += w;
                    }
                }
            }
        }
        let full = (1 << k) - 1;
        let closed: u64 = (1..k)
            .filter(|&e| g.has_edge(verts[e], verts[0]))
            .map(|e| ways[full][e])
            .sum();
        closed / 2
    }

    /// Exhaustive oracle: per-length cycle counts and the sorted vertex sets
    /// that support a Hamiltonian cycle of their induced subgraph.
    pub(crate) fn oracle(g: &Graph) -> (Vec<u64>, Vec<Vec<usize>>) {
        let n = g.n();
        let mut counts = vec![0u64; n + 1];
        let mut sets = Vec::new();
        for set in 1u32..(1 << n) {
            let c = hamiltonian_cycles(g, set);
            if c > 0 {
                counts[set.count_ones() as usize] += c;
                sets.push((0..n).filter(|&v| set & (1 << v) != 0).collect());
            }
        }
        sets.sort();
        (counts, sets)
    }

    fn is_cycle_of(g: &Graph, c: &[usize]) -> bool {
        let mut seen = c.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == c.len()
            && c.len() >= 3
            && (0..c.len()).all(|i| g.has_edge(c[i], c[(i + 1) % c.len()]))
    }

    #[test]
    fn complete_graph_triangles() {
        let cs = enumerate_short_cycles(&complete(4), 4).unwrap();
        assert_eq!(cs.len(), 4);
        assert_eq!(cs.cycles()[0], vec![0, 1, 2]);
        assert_eq!(girth(&complete(4)), Some(3));
    }

    #[test]
    fn hexagon_has_no_short_cycles() {
        assert!(enumerate_short_cycles(&cycle(6), 6).unwrap().is_empty());
        assert_eq!(enumerate_short_cycles(&cycle(6), 7).unwrap().len(), 1);
        assert_eq!(girth(&cycle(5)), Some(5));
        assert_eq!(girth(&path(7)), None);
    }

    #[test]
    fn petersen_pentagons_match_oracle() {
        let g = petersen();
        let cs = enumerate_short_cycles(&g, 6).unwrap();
        let (counts, _) = oracle(&g);
        assert_eq!(counts[5], 12);
        assert_eq!(cs.len(), 12);
        assert!(cs
            .cycles()
            .iter()
            .all(|c| c.len() == 5 && is_cycle_of(&g, c)));
    }

    #[test]
    fn k4_counts_by_length() {
        // 4 triangles and 3 four-cycles
        assert_eq!(
            count_cycles_by_length(&complete(4), 5),
            vec![0, 0, 0, 4, 3, 0]
        );
        // the 4-cycles share one vertex set
        assert_eq!(enumerate_short_cycles(&complete(4), 5).unwrap().len(), 5);
    }

    #[test]
    fn threshold_below_three_is_rejected() {
        assert!(matches!(
            enumerate_short_cycles(&complete(4), 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn witness_edges() {
        let cs = enumerate_short_cycles(&bowtie(), 4).unwrap();
        assert_eq!(cs.edges_of(0), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(cs.vertices_of(1), vec![0, 3, 4]);
    }

    fn small_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (3..=max_n, 0.1f64..0.6).prop_flat_map(|(n, p)| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            proptest::collection::vec(proptest::bool::weighted(p), pairs.len()).prop_map(
                move |keep| {
                    let edges = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(&e, _)| e);
                    Graph::from_edges(n, edges).unwrap()
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn enumeration_agrees_with_exhaustive_search(g in small_graph(10), t in 3usize..12) {
            let (counts, sets) = oracle(&g);
            let cs = enumerate_short_cycles(&g, t).unwrap();
            let expected: Vec<_> = sets.into_iter().filter(|s| s.len() < t).collect();
            let got: Vec<_> = (0..cs.len()).map(|i| cs.vertices_of(i)).collect();
            prop_assert_eq!(got, expected);
            for c in cs.cycles() {
                prop_assert!(is_cycle_of(&g, c));
            }
            let by_len = count_cycles_by_length(&g, g.n());
            prop_assert_eq!(&by_len[..], &counts[..]);
        }

        #[test]
        fn girth_is_shortest_enumerated_cycle(g in small_graph(12)) {
            let all = enumerate_short_cycles(&g, g.n() + 1).unwrap();
            prop_assert_eq!(girth(&g), all.min_length());
        }
    }
}
