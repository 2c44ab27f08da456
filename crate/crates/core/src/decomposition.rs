//! Cycle-deletion decomposition: one edge removed from every short cycle,
//! the cover `{V1, V2}` around the removed edges, and the chart of the dense
//! part.

use serde::{Deserialize, Serialize};

use crate::classifier::ClassParams;
use crate::error::{Error, Result};
use crate::graph::{
    densest_subgraph, enumerate_short_cycles, girth, multi_source_distances, CycleSet, Distance,
    Graph, MetricTable,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub graph: Graph,
    pub t: usize,
    pub cycles: CycleSet,
    /// One edge per short cycle, as sorted `(min, max)` pairs without
    /// repetition.
    pub removed: Vec<(usize, usize)>,
    /// The graph with the removed edges deleted.
    pub pruned: Graph,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    /// `min_x max_i d(x, V \ V_i)`: the largest radius of open balls that
    /// always fit in one cover element. Infinite when one element is `V`.
    pub lebesgue: Distance,
    /// `None` when the pruned graph is a forest.
    pub girth_pruned: Option<usize>,
    /// Pairwise distance of short cycles is at least `t`.
    pub separated: bool,
    /// Claims that should follow from separation but were not met.
    pub violations: Vec<String>,
}

/// Radius of the balls removed to form `V2`: the integer part of `t/2`.
pub fn v2_radius(t: usize) -> u32 {
    (t / 2) as u32
}

/// Decomposition with the threshold `p.t`.
pub fn build_decomposition(g: &Graph, p: &ClassParams) -> Result<Decomposition> {
    build_decomposition_t(g, p.t)
}

/// Removes the lexicographically smallest edge of every witness cycle of
/// length `< t` and derives
/// `V1 = {x : d(x, I) <= t}` and `V2 = {x : d(x, I) > floor(t/2)}`.
pub fn build_decomposition_t(g: &Graph, t: usize) -> Result<Decomposition> {
    if t < 3 {
        return Err(Error::InvalidParameter(format!(
            "decomposition threshold t = {t} must be at least 3"
        )));
    }
    let cycles = enumerate_short_cycles(g, t)?;
    let mut removed: Vec<(usize, usize)> =
        (0..cycles.len()).map(|i| cycles.edges_of(i)[0]).collect();
    removed.sort_unstable();
    removed.dedup();
    let pruned = g.without_edges(&removed);
    let ends = endpoints(&removed);
    let dist = multi_source_distances(g, &ends);
    let half = v2_radius(t);
    let v1: Vec<usize> = (0..g.n())
        .filter(|&x| dist[x].value().is_some_and(|d| d as usize <= t))
        .collect();
    let v2: Vec<usize> = (0..g.n())
        .filter(|&x| dist[x].value().is_none_or(|d| d > half))
        .collect();
    let lebesgue = lebesgue_number(g, &[&v1, &v2]);
    let girth_pruned = girth(&pruned);
    let separated = cycle_separation(g, &cycles).is_none();
    let mut violations = Vec::new();
    if separated {
        if girth_pruned.is_some_and(|l| l < t) {
            violations.push(format!(
                "girth of the pruned graph is {} < t = {t}",
                girth_pruned.unwrap_or(0)
            ));
        }
        if lebesgue.as_f64() < t as f64 / 2.0 {
            violations.push(format!(
                "Lebesgue number {lebesgue} < t/2 = {}",
                t as f64 / 2.0
            ));
        }
    }
    Ok(Decomposition {
        graph: g.clone(),
        t,
        cycles,
        removed,
        pruned,
        v1,
        v2,
        lebesgue,
        girth_pruned,
        separated,
        violations,
    })
}

/// Sorted distinct endpoints of an edge list.
pub fn endpoints(edges: &[(usize, usize)]) -> Vec<usize> {
    let mut e: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    e.sort_unstable();
    e.dedup();
    e
}

/// `min_x max_i d(x, V \ V_i)` over a cover of `0..n`.
pub fn lebesgue_number(g: &Graph, cover: &[&[usize]]) -> Distance {
    lebesgue_witness(g, cover).0
}

/// Lebesgue number and a vertex attaining it.
fn lebesgue_witness(g: &Graph, cover: &[&[usize]]) -> (Distance, Option<usize>) {
    let n = g.n();
    let outside: Vec<Vec<Distance>> = cover
        .iter()
        .map(|set| {
            let mut member = vec![false; n];
            set.iter().for_each(|&v| member[v] = true);
            let rest: Vec<usize> = (0..n).filter(|&v| !member[v]).collect();
            multi_source_distances(g, &rest)
        })
        .collect();
    (0..n)
        .map(|x| {
            (
                outside.iter().map(|d| d[x]).max().unwrap_or(Distance::ZERO),
                x,
            )
        })
        .min()
        .map_or((Distance::INFINITE, None), |(d, x)| (d, Some(x)))
}

/// First pair of short cycles (by index) closer than the threshold, with
/// their distance.
fn cycle_separation(g: &Graph, cycles: &CycleSet) -> Option<(usize, usize, Distance)> {
    let t = cycles.threshold() as u32;
    for i in 0..cycles.len() {
        let dist = multi_source_distances(g, &cycles.cycles()[i]);
        for j in i + 1..cycles.len() {
            let d = cycles.cycles()[j]
                .iter()
                .map(|&v| dist[v])
                .min()
                .unwrap_or(Distance::INFINITE);
            if d.value().is_some_and(|d| d < t) {
                return Some((i, j, d));
            }
        }
    }
    None
}

/// Outcome of one checked claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub pass: bool,
    pub detail: String,
    /// Vertices exhibiting a failure.
    pub witness: Option<Vec<usize>>,
}

impl Claim {
    fn ok(detail: String) -> Self {
        Claim {
            pass: true,
            detail,
            witness: None,
        }
    }

    fn fail(detail: String, witness: Vec<usize>) -> Self {
        Claim {
            pass: false,
            detail,
            witness: Some(witness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub lebesgue: Claim,
    pub girth: Claim,
    pub quasi_isometry: Claim,
    pub separation: Claim,
    pub pruned_connected: Claim,
    pub all_pass: bool,
}

/// Re-checks the decomposition claims from scratch.
pub fn verify_decomposition(dec: &Decomposition) -> DecompositionReport {
    let g = &dec.graph;
    let t = dec.t;
    let (leb, at) = lebesgue_witness(g, &[&dec.v1, &dec.v2]);
    let lebesgue = if leb.as_f64() >= t as f64 / 2.0 {
        Claim::ok(format!("Lebesgue number {leb} >= {}", t as f64 / 2.0))
    } else {
        Claim::fail(
            format!("Lebesgue number {leb} < {}", t as f64 / 2.0),
            at.into_iter().collect(),
        )
    };

    let girth = match girth(&dec.pruned) {
        Some(l) if l < t => {
            let short = enumerate_short_cycles(&dec.pruned, t).expect("t >= 3");
            Claim::fail(format!("pruned girth {l} < {t}"), short.cycles()[0].clone())
        }
        Some(l) => Claim::ok(format!("pruned girth {l} >= {t}")),
        None => Claim::ok("pruned graph is a forest".into()),
    };

    let dg = MetricTable::from_graph(g);
    let dl = MetricTable::from_graph(&dec.pruned);
    let mut worst = (0.0f64, None);
    let mut bad = None;
    'outer: for (a, &x) in dec.v2.iter().enumerate() {
        for &y in &dec.v2[a + 1..] {
            let (g_xy, l_xy) = (dg.get(x, y), dl.get(x, y));
            if l_xy < g_xy || l_xy.as_f64() > 3.0 * g_xy.as_f64() {
                bad = Some((x, y, g_xy, l_xy));
                break 'outer;
            }
            if let (Some(a), Some(b)) = (g_xy.value(), l_xy.value()) {
                let ratio = b as f64 / a as f64;
                if ratio > worst.0 {
                    worst = (ratio, Some((x, y)));
                }
            }
        }
    }
    let quasi_isometry = match bad {
        Some((x, y, a, b)) => Claim::fail(format!("d_G({x},{y}) = {a}, d_L = {b}"), vec![x, y]),
        None => Claim::ok(format!("max d_L/d_G on V2 is {}", worst.0)),
    };

    let separation = match cycle_separation(g, &dec.cycles) {
        Some((i, j, d)) => {
            let mut w = dec.cycles.vertices_of(i);
            w.extend(dec.cycles.vertices_of(j));
            Claim::fail(format!("cycles {i} and {j} are at distance {d} < {t}"), w)
        }
        None => Claim::ok(format!(
            "{} short cycles pairwise >= {t} apart",
            dec.cycles.len()
        )),
    };

    let reach = crate::graph::bfs_distances(&dec.pruned, 0);
    let pruned_connected = match (0..g.n()).find(|&v| !reach[v].is_finite()) {
        Some(v) => Claim::fail(format!("vertex {v} is cut off from 0"), vec![0, v]),
        None => Claim::ok("pruned graph is connected".into()),
    };

    let all_pass = [
        &lebesgue,
        &girth,
        &quasi_isometry,
        &separation,
        &pruned_connected,
    ]
    .iter()
    .all(|c| c.pass);
    DecompositionReport {
        lebesgue,
        girth,
        quasi_isometry,
        separation,
        pruned_connected,
        all_pass,
    }
}

/// Measured values behind the chart bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartChecks {
    pub size: usize,
    pub size_bound: f64,
    pub diameter: Distance,
    pub diameter_bound: f64,
    /// `max d_H/d_G` over distinct pairs of `S`.
    pub distortion: f64,
    pub distortion_bound: f64,
    /// `max d_G/d_H` over distinct pairs of `S` (at most 1 for an induced
    /// subgraph).
    pub contraction: f64,
    pub size_ok: bool,
    pub diameter_ok: bool,
    pub distortion_ok: bool,
    /// Densest subgraph of `H` and whether it is `(1 + delta)`-sparse;
    /// informational.
    pub h_density: Option<f64>,
    pub h_sparse: Option<bool>,
}

/// Neighbourhood of the removed edges in which the dense part is embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub r: usize,
    /// Endpoints of the removed edges.
    pub t_set: Vec<usize>,
    /// `V1`.
    pub s: Vec<usize>,
    /// Sorted; `h` vertex `i` is `u[i]`.
    pub u: Vec<usize>,
    pub h: Graph,
    pub checks: Option<ChartChecks>,
}

impl Chart {
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn verified(&self) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|c| c.size_ok && c.diameter_ok && c.distortion_ok)
    }
}

/// Balls of radius `3r` (with `r = t`) around the removed-edge endpoints,
/// joined by geodesics to the smallest endpoint; `H` is the induced
/// subgraph. The size, diameter and distortion bounds are measured.
pub fn chart_dense_part(dec: &Decomposition, delta: f64) -> Result<Chart> {
    let g = &dec.graph;
    let r = dec.t;
    let t_set = endpoints(&dec.removed);
    if t_set.is_empty() {
        return Ok(Chart {
            r,
            t_set,
            s: Vec::new(),
            u: Vec::new(),
            h: Graph::from_edges(0, [])?,
            checks: None,
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let metric = MetricTable::from_graph(g);
    let diam = metric.diameter().value().expect("connected") as f64;
    let mut member = vec![false; g.n()];
    for &x in &t_set {
        for y in metric.ball(x, 3 * r as u32) {
            member[y] = true;
        }
        for y in metric.geodesic(g, t_set[0], x).expect("connected") {
            member[y] = true;
        }
    }
    let u: Vec<usize> = (0..g.n()).filter(|&v| member[v]).collect();
    let (h, _) = g.induced_subgraph(&u);
    let hm = MetricTable::from_graph(&h);
    let mut index = vec![usize::MAX; g.n()];
    for (i, &v) in u.iter().enumerate() {
        index[v] = i;
    }
    let s = dec.v1.clone();
    if let Some(&missing) = s.iter().find(|&&v| index[v] == usize::MAX) {
        return Err(Error::Internal(format!(
            "V1 vertex {missing} outside the chart"
        )));
    }
    let (mut distortion, mut contraction) = (1.0f64, 1.0f64);
    for (a, &x) in s.iter().enumerate() {
        for &y in &s[a + 1..] {
            let dg = metric.get(x, y).as_f64();
            let dh = hm.get(index[x], index[y]).as_f64();
            distortion = distortion.max(dh / dg);
            contraction = contraction.max(dg / dh);
        }
    }
    let d = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0) as f64;
    let size_bound = t_set.len() as f64 * (d * (d - 1.0).powi(3 * r as i32 - 1) + diam);
    let diameter = hm.diameter();
    let diameter_bound = 6.0 * r as f64 + 2.0 * diam;
    let distortion_bound = 2.0 * (diam / r as f64 + 1.0);
    let dense = densest_subgraph(&h).ok();
    let checks = ChartChecks {
        size: u.len(),
        size_bound,
        diameter,
        diameter_bound,
        distortion,
        distortion_bound,
        contraction,
        size_ok: u.len() as f64 <= size_bound,
        diameter_ok: diameter.as_f64() <= diameter_bound,
        distortion_ok: contraction <= 1.0 && distortion <= distortion_bound,
        h_density: dense.as_ref().map(|x| x.density_f64()),
        h_sparse: dense.as_ref().map(|x| x.is_sparse(delta)),
    };
    Ok(Chart {
        r,
        t_set,
        s,
        u,
        h,
        checks: Some(checks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    #[test]
    fn triangle_loses_its_smallest_edge() {
        let dec = build_decomposition_t(&cycle(3), 4).unwrap();
        assert_eq!(dec.removed, vec![(0, 1)]);
        assert_eq!(dec.pruned.sorted_edges(), vec![(0, 2), (1, 2)]);
        assert_eq!(dec.girth_pruned, None);
        assert_eq!(dec.v1, vec![0, 1, 2]);
        assert!(dec.v2.is_empty());
        assert_eq!(dec.lebesgue, Distance::INFINITE);
    }

    #[test]
    fn hexagon_has_nothing_to_remove() {
        let dec = build_decomposition_t(&cycle(6), 4).unwrap();
        assert!(dec.removed.is_empty());
        assert_eq!(dec.pruned, cycle(6));
        assert!(dec.v1.is_empty());
        assert_eq!(dec.v2, (0..6).collect::<Vec<_>>());
        assert_eq!(dec.girth_pruned, Some(6));
        assert!(verify_decomposition(&dec).all_pass);
        assert!(chart_dense_part(&dec, 0.1).unwrap().is_empty());
    }

    #[test]
    fn planted_triangles_on_a_long_path() {
        let g = two_triangles_with_path(10);
        let dec = build_decomposition_t(&g, 4).unwrap();
        assert_eq!(dec.removed, vec![(0, 1), (3, 4)]);
        assert_eq!(dec.girth_pruned, None);
        assert!(dec.separated && dec.violations.is_empty());
        let rep = verify_decomposition(&dec);
        assert!(rep.all_pass, "{rep:?}");
        // exhaustive d_L <= 3 d_G on V2
        let (dg, dl) = (
            MetricTable::from_graph(&g),
            MetricTable::from_graph(&dec.pruned),
        );
        for &x in &dec.v2 {
            for &y in &dec.v2 {
                assert!(dg.get(x, y) <= dl.get(x, y));
                assert!(dl.get(x, y).as_f64() <= 3.0 * dg.get(x, y).as_f64());
            }
        }
    }

    #[test]
    fn bowtie_fails_cycle_separation() {
        let dec = build_decomposition_t(&bowtie(), 4).unwrap();
        assert!(!dec.separated);
        let rep = verify_decomposition(&dec);
        assert!(!rep.separation.pass);
        assert_eq!(rep.separation.witness, Some(vec![0, 1, 2, 0, 3, 4]));
        assert!(!rep.all_pass);
    }

    #[test]
    fn cover_overlap_is_the_annulus() {
        for t in 3..=8 {
            let g = two_triangles_with_path(16);
            let dec = build_decomposition_t(&g, t.max(4)).unwrap();
            let dist = multi_source_distances(&g, &endpoints(&dec.removed));
            let both: Vec<usize> = dec
                .v1
                .iter()
                .copied()
                .filter(|v| dec.v2.contains(v))
                .collect();
            let expected: Vec<usize> = (0..g.n())
                .filter(|&x| {
                    let d = dist[x].value().unwrap() as usize;
                    d > dec.t / 2 && d <= dec.t
                })
                .collect();
            assert_eq!(both, expected);
        }
    }

    #[test]
    fn lebesgue_bound_holds_for_small_t_and_fails_beyond() {
        // a planted triangle far from anything else on a long path
        let mut edges = vec![(0, 1), (1, 2), (0, 2)];
        edges.extend((2..40).map(|i| (i, i + 1)));
        let g = Graph::from_edges(41, edges).unwrap();
        for t in [3, 4] {
            let dec = build_decomposition_t(&g, t).unwrap();
            assert!(
                dec.lebesgue.as_f64() >= t as f64 / 2.0,
                "t = {t}: {}",
                dec.lebesgue
            );
        }
        // with t = 6 the middle of the band t/2 < d <= t is about t/4 from
        // both complements
        let dec = build_decomposition_t(&g, 6).unwrap();
        assert!(dec.lebesgue.as_f64() < 3.0);
        assert!(!dec.violations.is_empty());
    }

    #[test]
    fn chart_of_a_triangle() {
        let dec = build_decomposition_t(&cycle(3), 4).unwrap();
        let chart = chart_dense_part(&dec, 0.5).unwrap();
        assert_eq!(chart.u, vec![0, 1, 2]);
        assert_eq!(chart.h.sorted_edges(), cycle(3).sorted_edges());
        assert!(chart.verified());
    }

    #[test]
    fn chart_of_the_planted_graph_is_isometric_on_v1() {
        let g = two_triangles_with_path(10);
        let dec = build_decomposition_t(&g, 4).unwrap();
        let chart = chart_dense_part(&dec, 0.5).unwrap();
        let c = chart.checks.as_ref().unwrap();
        assert!(chart.verified());
        assert_eq!(c.distortion, 1.0);
        assert!(dec.v1.iter().all(|v| chart.u.contains(v)));
        // the chart spans the whole 15-vertex graph here
        assert_eq!(chart.u.len(), g.n());
    }

    #[test]
    fn chart_needs_a_connected_graph() {
        let g = disjoint_union(&cycle(3), &cycle(5));
        let dec = build_decomposition_t(&g, 4).unwrap();
        assert_eq!(chart_dense_part(&dec, 0.5), Err(Error::Disconnected));
    }

    #[test]
    fn removed_edges_depend_only_on_the_input() {
        let g = petersen();
        let a = build_decomposition_t(&g, 6).unwrap();
        let b = build_decomposition_t(&g, 6).unwrap();
        assert_eq!(a.removed, b.removed);
        assert!(a.removed.len() <= a.cycles.len());
    }
}
