//! Class parameters and membership tests for sparse, short-cycle-poor,
//! expanding regular graphs.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    densest_subgraph, densest_subgraph_of, edge_boundary_ratio, enumerate_cycles,
    enumerate_short_cycles, multi_source_distances, spectral_gap, sweep_cut, CycleSet, Distance,
    ExpansionKind, Graph, MetricTable, EXACT_EXPANSION_LIMIT,
};

/// Graphs up to this order are checked for sparsity by brute force.
pub const EXACT_SPARSITY_LIMIT: usize = 20;

/// Upper limit on the short cycles paired up by the sparsity search.
const CYCLE_PAIR_LIMIT: usize = 4000;

/// Explicit values replacing the derived constants (scaled-parameter mode).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_bound: Option<f64>,
    /// Kernel scale `R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("override {what}")));
        if self.t == Some(0) {
            return bad("t must be at least 1");
        }
        if self.delta.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
            return bad("delta must be positive");
        }
        for (name, v) in [
            ("size_threshold", self.size_threshold),
            ("cycle_bound", self.cycle_bound),
            ("r", self.r),
        ] {
            if v.is_some_and(|x| x.is_nan() || x < 0.0) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }
}

/// The constants as the formulas give them, before overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaConstants {
    pub t: usize,
    pub delta: f64,
    /// `n^(1-eps)`; `null` in JSON when it overflows.
    #[serde(with = "inf_as_null")]
    pub size_threshold: f64,
    /// `n^(1-2 eps)`.
    #[serde(with = "inf_as_null")]
    pub cycle_bound: f64,
    /// `c log_d n`.
    pub r: f64,
}

/// Constants derived from `(d, eps, M, n)` plus the effective values after
/// overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub d: usize,
    pub epsilon: f64,
    pub m: f64,
    /// Vertex count when it fits in 64 bits.
    pub n: Option<u64>,
    pub log_d_n: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    /// Whether `[c1 log_d n, c2 log_d n]` contains an integer.
    pub t_interval_nonempty: bool,
    /// Whether `n` meets all three requirements on `N`.
    pub n_valid: bool,
    pub formula: FormulaConstants,
    pub overrides: Overrides,
    pub t: usize,
    pub delta: f64,
    #[serde(with = "inf_as_null")]
    pub size_threshold: f64,
    #[serde(with = "inf_as_null")]
    pub cycle_bound: f64,
    pub r: f64,
}

impl ClassParams {
    pub fn scaled(&self) -> bool {
        !self.overrides.is_empty()
    }

    /// `M log_d n`.
    pub fn diameter_bound(&self) -> f64 {
        self.m * self.log_d_n
    }

    /// `1/M`.
    pub fn expansion_bound(&self) -> f64 {
        1.0 / self.m
    }

    /// Largest subset size constrained by the sparsity condition on a graph
    /// of `n` vertices.
    pub fn size_limit(&self, n: usize) -> usize {
        if self.size_threshold >= n as f64 {
            n
        } else {
            (self.size_threshold + 1e-9).floor() as usize
        }
    }
}

/// Parameters for an `n`-vertex graph.
pub fn derive_params(
    d: usize,
    epsilon: f64,
    m: f64,
    n: u64,
    overrides: Overrides,
) -> Result<ClassParams> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 2"
        )));
    }
    let mut p = derive_params_log(d, epsilon, m, (n as f64).ln() / (d as f64).ln(), overrides)?;
    p.n = Some(n);
    Ok(p)
}

/// Parameters from `log_d n` directly, for vertex counts too large to
/// represent.
pub fn derive_params_log(
    d: usize,
    epsilon: f64,
    m: f64,
    log_d_n: f64,
    overrides: Overrides,
) -> Result<ClassParams> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "degree d = {d} must be at least 3"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.2) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must lie in (0, 1/5)"
        )));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("M = {m} must be positive")));
    }
    if !(log_d_n.is_finite() && log_d_n > 0.0) {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    overrides.validate()?;
    let (c1, c2) = (epsilon / 50.0, epsilon / 25.0);
    let c = c1 / 6.0;
    let (lo, hi) = (c1 * log_d_n, c2 * log_d_n);
    let smallest = (lo - 1e-9).ceil().max(0.0);
    let t_interval_nonempty = smallest <= hi + 1e-9 && smallest >= 1.0;
    let formula_t = if t_interval_nonempty {
        smallest as usize
    } else {
        lo.ceil().max(1.0) as usize
    };
    let formula_delta = 7.0 / (epsilon * log_d_n);
    let ln_n = log_d_n * (d as f64).ln();
    // n^{4 c2} >= 2 n^{3 c2} + 2 M log_d n, compared in log space
    let a = std::f64::consts::LN_2 + 3.0 * c2 * ln_n;
    let b = (2.0 * m * log_d_n).ln();
    let rhs = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    let growth = 4.0 * c2 * ln_n >= rhs;
    let formula = FormulaConstants {
        t: formula_t,
        delta: formula_delta,
        size_threshold: ((1.0 - epsilon) * ln_n).exp(),
        cycle_bound: ((1.0 - 2.0 * epsilon) * ln_n).exp(),
        r: c * log_d_n,
    };
    Ok(ClassParams {
        d,
        epsilon,
        m,
        n: None,
        log_d_n,
        c1,
        c2,
        c,
        t_interval_nonempty,
        n_valid: t_interval_nonempty && formula_delta < 1.0 && growth,
        t: overrides.t.unwrap_or(formula.t),
        delta: overrides.delta.unwrap_or(formula.delta),
        size_threshold: overrides.size_threshold.unwrap_or(formula.size_threshold),
        cycle_bound: overrides.cycle_bound.unwrap_or(formula.cycle_bound),
        r: overrides.r.unwrap_or(formula.r),
        formula,
        overrides,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Conjunction: any failure fails, otherwise any doubt is inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Conservative,
    Sampled,
}

/// Which stage of the sparsity check produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityTier {
    BruteForce,
    GlobalDensity,
    CyclePairs,
    BallDensity,
    WitnessSearch,
}

/// Outcome of the size-constrained sparsity condition: every `S` with
/// `|S| <= size_limit` spans fewer than `(1 + delta)|S|` edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityCheck {
    pub verdict: Verdict,
    pub mode: Mode,
    pub tier: SparsityTier,
    pub delta: f64,
    pub size_limit: usize,
    /// Unconstrained maximum density, when it was computed.
    pub densest: Option<Ratio<u64>>,
    /// Violating set (always present on failure).
    pub witness: Option<Vec<usize>>,
    pub witness_edges: Option<usize>,
}

fn violates(edges: usize, size: usize, delta: f64) -> bool {
    edges as f64 >= (1.0 + delta) * size as f64
}

/// Sparsity condition with the thresholds taken from `p`.
pub fn check_s_epsilon(g: &Graph, p: &ClassParams) -> Result<SparsityCheck> {
    check_sparsity(g, p.delta, p.size_limit(g.n()))
}

/// Decides whether every `S` with `|S| <= size_limit` has
/// `|E(S)| < (1 + delta)|S|`.
///
/// Small graphs are searched exhaustively. Otherwise: an unconstrained
/// density below `1 + delta` passes. When `delta * size_limit <= 1` a
/// connected violator is exactly a connected set with two independent
/// cycles, so pairs of short cycles decide the question. Failing that, every
/// ball of radius `ceil((size_limit - 1)/2)` is checked (a connected
/// violator fits in one), and a witness search runs when some ball is too
/// dense.
pub fn check_sparsity(g: &Graph, delta: f64, size_limit: usize) -> Result<SparsityCheck> {
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let size_limit = size_limit.min(n);
    let base = SparsityCheck {
        verdict: Verdict::Pass,
        mode: Mode::Exact,
        tier: SparsityTier::BruteForce,
        delta,
        size_limit,
        densest: None,
        witness: None,
        witness_edges: None,
    };
    let fail = |tier, mode, densest, set: Vec<usize>| SparsityCheck {
        verdict: Verdict::Fail,
        mode,
        tier,
        densest,
        witness_edges: Some(g.induced_edge_count(&set)),
        witness: Some(set),
        ..base.clone()
    };
    if size_limit == 0 {
        return Ok(base);
    }
    if n <= EXACT_SPARSITY_LIMIT {
        return Ok(match brute_force_violator(g, delta, size_limit) {
            Some(set) => fail(SparsityTier::BruteForce, Mode::Exact, None, set),
            None => base,
        });
    }
    let dense = densest_subgraph(g)?;
    let densest = Some(dense.density);
    if (dense.edges as f64) < (1.0 + delta) * dense.witness.len() as f64 {
        return Ok(SparsityCheck {
            mode: Mode::Conservative,
            tier: SparsityTier::GlobalDensity,
            densest,
            ..base
        });
    }
    if dense.witness.len() <= size_limit {
        return Ok(fail(
            SparsityTier::GlobalDensity,
            Mode::Exact,
            densest,
            dense.witness,
        ));
    }
    let cycles = enumerate_cycles(g, size_limit);
    let pair = if cycles.len() <= CYCLE_PAIR_LIMIT {
        smallest_cycle_pair(g, &cycles, size_limit)
    } else {
        None
    };
    if delta * size_limit as f64 <= 1.0 + 1e-12 && cycles.len() <= CYCLE_PAIR_LIMIT {
        return Ok(match pair {
            Some(set) => fail(SparsityTier::CyclePairs, Mode::Exact, densest, set),
            None => SparsityCheck {
                tier: SparsityTier::CyclePairs,
                densest,
                ..base
            },
        });
    }
    let metric = MetricTable::from_graph(g);
    let radius = size_limit.saturating_sub(1).div_ceil(2) as u32;
    let mut dense_balls = Vec::new();
    for x in 0..n {
        let ball = metric.ball(x, radius);
        let local = densest_subgraph_of(g, &ball)?;
        if violates(local.edges, local.witness.len(), delta) {
            if local.witness.len() <= size_limit {
                return Ok(fail(
                    SparsityTier::BallDensity,
                    Mode::Exact,
                    densest,
                    local.witness,
                ));
            }
            dense_balls.push(ball);
        }
    }
    if dense_balls.is_empty() {
        return Ok(SparsityCheck {
            mode: Mode::Conservative,
            tier: SparsityTier::BallDensity,
            densest,
            ..base
        });
    }
    if let Some(set) = pair.filter(|s| violates(g.induced_edge_count(s), s.len(), delta)) {
        return Ok(fail(
            SparsityTier::WitnessSearch,
            Mode::Sampled,
            densest,
            set,
        ));
    }
    Ok(SparsityCheck {
        verdict: Verdict::Inconclusive,
        mode: Mode::Sampled,
        tier: SparsityTier::WitnessSearch,
        densest,
        ..base
    })
}

/// First violating set in bitmask order among sets of size `<= size_limit`.
fn brute_force_violator(g: &Graph, delta: f64, size_limit: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0, |acc, &w| acc | (1u32 << w)))
        .collect();
    (1u32..(1 << n))
        .filter(|s| s.count_ones() as usize <= size_limit)
        .find(|&set| {
            let mut twice = 0;
            let mut rest = set;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                twice += (adj[v] & set).count_ones() as usize;
                rest &= rest - 1;
            }
            violates(twice / 2, set.count_ones() as usize, delta)
        })
        .map(|set| (0..n).filter(|&v| set & (1 << v) != 0).collect())
}

/// Smallest vertex set of the form `C1 u C2 u P` (two distinct cycles and a
/// shortest path between them) with at most `size_limit` vertices. Such a
/// set is connected with at least two independent cycles, so it spans at
/// least one edge more than it has vertices.
fn smallest_cycle_pair(g: &Graph, cycles: &[Vec<usize>], size_limit: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let dists: Vec<Vec<Distance>> = cycles
        .iter()
        .map(|c| multi_source_distances(g, c))
        .collect();
    let mut member = vec![usize::MAX; n];
    let mut best: Option<(usize, usize, usize)> = None;
    for (i, ci) in cycles.iter().enumerate() {
        for &v in ci {
            member[v] = i;
        }
        for (j, cj) in cycles.iter().enumerate().skip(i + 1) {
            let shared = cj.iter().filter(|&&v| member[v] == i).count();
            let size = if shared > 0 {
                ci.len() + cj.len() - shared
            } else {
                let gap = cj
                    .iter()
                    .map(|&v| dists[i][v])
                    .min()
                    .and_then(Distance::value);
                match gap {
                    Some(gap) => ci.len() + cj.len() + gap as usize - 1,
                    None => continue,
                }
            };
            if size <= size_limit && best.is_none_or(|(s, _, _)| size < s) {
                best = Some((size, i, j));
            }
        }
    }
    let (_, i, j) = best?;
    let mut set: Vec<usize> = cycles[i].iter().chain(&cycles[j]).copied().collect();
    set.extend(connecting_path(g, &cycles[j], &dists[i]));
    set.sort_unstable();
    set.dedup();
    Some(set)
}

/// Interior of a shortest path to the nearest vertex of `to`, following the
/// BFS layers `dist_from` (empty when the sets meet).
fn connecting_path(g: &Graph, to: &[usize], dist_from: &[Distance]) -> Vec<usize> {
    let Some(&end) = to.iter().min_by_key(|&&v| (dist_from[v], v)) else {
        return Vec::new();
    };
    let mut path = Vec::new();
    let mut cur = end;
    while dist_from[cur] > Distance::finite(1) {
        let next = dist_from[cur].value().expect("finite above") - 1;
        cur = *g
            .neighbors(cur)
            .iter()
            .find(|&&w| dist_from[w] == Distance::finite(next))
            .expect("BFS layer");
        path.push(cur);
    }
    path
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterCheck {
    pub verdict: Verdict,
    pub mode: Mode,
    /// `null` when the graph is disconnected.
    pub diameter: Distance,
    pub bound: f64,
    /// A longest geodesic on failure, or a pair in different components.
    pub witness: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCheck {
    pub verdict: Verdict,
    pub mode: Mode,
    pub t: usize,
    pub count: usize,
    #[serde(with = "inf_as_null")]
    pub bound: f64,
    /// The short cycles on failure.
    pub witness: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub verdict: Verdict,
    pub mode: Mode,
    /// `min |dS|/|S|` (exact), `(d - lambda2)/2` (conservative) or the
    /// ratio of the best sampled set.
    pub value: f64,
    pub bound: f64,
    pub lambda2: Option<f64>,
    /// `|dS|` for the witness set; the literal reading of the condition
    /// compares this number, not the ratio, with `1/M`.
    pub boundary: Option<usize>,
    pub witness: Option<Vec<usize>>,
}

/// Per-condition verdicts for class membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub n: usize,
    pub d: usize,
    pub scaled: bool,
    /// Every vertex has degree `d`.
    pub regular: bool,
    pub sparsity: SparsityCheck,
    pub diameter: DiameterCheck,
    pub cycles: CycleCheck,
    pub expansion: ExpansionCheck,
    pub member: Verdict,
}

/// Evaluates the four class conditions and regularity.
pub fn check_membership(g: &Graph, p: &ClassParams) -> Result<ClassReport> {
    if let Some(n) = p.n {
        if n != g.n() as u64 {
            return Err(Error::InvalidParameter(format!(
                "graph has {} vertices, parameters are for n = {n}",
                g.n()
            )));
        }
    }
    let regular = g.regular_degree() == Some(p.d);
    let sparsity = check_s_epsilon(g, p)?;
    let diameter = check_diameter(g, p);
    let cycles = check_cycles(g, p)?;
    let expansion = check_expansion(g, p)?;
    let mut member = if regular {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    for v in [
        sparsity.verdict,
        diameter.verdict,
        cycles.verdict,
        expansion.verdict,
    ] {
        member = member.and(v);
    }
    Ok(ClassReport {
        n: g.n(),
        d: p.d,
        scaled: p.scaled(),
        regular,
        sparsity,
        diameter,
        cycles,
        expansion,
        member,
    })
}

pub fn check_diameter(g: &Graph, p: &ClassParams) -> DiameterCheck {
    let metric = MetricTable::from_graph(g);
    let diameter = metric.diameter();
    let bound = p.diameter_bound();
    let ok = diameter.as_f64() <= bound + 1e-9;
    let witness = (!ok).then(|| {
        let (x, y) = metric.diameter_pair().expect("nonempty graph");
        metric.geodesic(g, x, y).unwrap_or_else(|| vec![x, y])
    });
    DiameterCheck {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        mode: Mode::Exact,
        diameter,
        bound,
        witness,
    }
}

pub fn check_cycles(g: &Graph, p: &ClassParams) -> Result<CycleCheck> {
    let found = if p.t >= 3 {
        enumerate_short_cycles(g, p.t)?
    } else {
        enumerate_short_cycles(g, 3)?
    };
    let ok = found.len() as f64 <= p.cycle_bound;
    Ok(CycleCheck {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        mode: Mode::Exact,
        t: p.t,
        count: found.len(),
        bound: p.cycle_bound,
        witness: (!ok).then(|| found.cycles().to_vec()),
    })
}

pub fn check_expansion(g: &Graph, p: &ClassParams) -> Result<ExpansionCheck> {
    let bound = p.expansion_bound();
    let n = g.n();
    let verdict = |ok: bool| if ok { Verdict::Pass } else { Verdict::Fail };
    if n < 2 {
        return Err(Error::InvalidParameter(
            "expansion needs at least two vertices".into(),
        ));
    }
    if n <= EXACT_EXPANSION_LIMIT {
        let r = edge_boundary_ratio(g)?;
        debug_assert_eq!(r.kind, ExpansionKind::Exact);
        let witness = r.witness.expect("exact mode has a witness");
        return Ok(ExpansionCheck {
            verdict: verdict(r.value >= bound - 1e-12),
            mode: Mode::Exact,
            value: r.value,
            bound,
            lambda2: None,
            boundary: Some(g.boundary_size(&witness)),
            witness: Some(witness),
        });
    }
    if !g.is_connected() {
        let dist = crate::graph::bfs_distances(g, 0);
        let comp: Vec<usize> = (0..n).filter(|&v| dist[v].is_finite()).collect();
        let set = if 2 * comp.len() <= n {
            comp
        } else {
            (0..n).filter(|&v| !dist[v].is_finite()).collect()
        };
        return Ok(ExpansionCheck {
            verdict: Verdict::Fail,
            mode: Mode::Exact,
            value: 0.0,
            bound,
            lambda2: None,
            boundary: Some(0),
            witness: Some(set),
        });
    }
    let d = match g.regular_degree() {
        Some(d) => d as f64,
        None => {
            return Ok(ExpansionCheck {
                verdict: Verdict::Inconclusive,
                mode: Mode::Sampled,
                value: f64::NAN,
                bound,
                lambda2: None,
                boundary: None,
                witness: None,
            })
        }
    };
    let lambda2 = spectral_gap(g)?;
    let cheeger = (d - lambda2) / 2.0;
    if cheeger >= bound {
        return Ok(ExpansionCheck {
            verdict: Verdict::Pass,
            mode: Mode::Conservative,
            value: cheeger,
            bound,
            lambda2: Some(lambda2),
            boundary: None,
            witness: None,
        });
    }
    let (ratio, set) = sweep_cut(g)?;
    let value = *ratio.numer() as f64 / *ratio.denom() as f64;
    let failed = value < bound;
    Ok(ExpansionCheck {
        verdict: if failed {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        },
        mode: Mode::Sampled,
        value,
        bound,
        lambda2: Some(lambda2),
        boundary: Some(g.boundary_size(&set)),
        witness: Some(set),
    })
}

/// Short cycles of `g` below `p.t` (empty when `t < 3`).
pub fn short_cycles(g: &Graph, p: &ClassParams) -> Result<CycleSet> {
    enumerate_short_cycles(g, p.t.max(3))
}

pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::random_regular::{sample_indexed, SamplerConfig};
    use proptest::prelude::*;

    fn scaled(d: usize, m: f64, n: u64, o: Overrides) -> ClassParams {
        derive_params(d, 0.1, m, n, o).unwrap()
    }

    #[test]
    fn formula_constants_for_huge_n() {
        let p = derive_params_log(3, 0.1, 10.0, 1000.0, Overrides::default()).unwrap();
        assert!((p.c1 - 0.002).abs() < 1e-15);
        assert!((p.c2 - 0.004).abs() < 1e-15);
        assert_eq!(p.t, 2);
        assert!((p.delta - 0.07).abs() < 1e-12);
        assert!((p.c - 1.0 / 3000.0).abs() < 1e-15);
        assert!(p.n_valid);
        assert!(!p.scaled());
        assert!(p.size_threshold.is_infinite());
    }

    #[test]
    fn formula_constants_invalid_at_desk_scale() {
        let p = derive_params(3, 0.1, 10.0, 1000, Overrides::default()).unwrap();
        assert!(!p.n_valid);
        assert!((p.delta - 7.0 / (0.1 * 1000f64.ln() / 3f64.ln())).abs() < 1e-12);
        assert!(p.delta > 11.0);
    }

    #[test]
    fn overrides_are_carried_verbatim() {
        let o = Overrides {
            t: Some(5),
            delta: Some(0.2),
            size_threshold: Some(30.0),
            ..Overrides::default()
        };
        let p = derive_params(3, 0.1, 10.0, 1000, o.clone()).unwrap();
        assert!(p.scaled());
        assert_eq!((p.t, p.delta, p.size_threshold), (5, 0.2, 30.0));
        assert_eq!(p.overrides, o);
        assert_eq!(p.formula.t, 1);
    }

    #[test]
    fn parameter_domain() {
        assert!(derive_params(2, 0.1, 1.0, 100, Overrides::default()).is_err());
        assert!(derive_params(3, 0.2, 1.0, 100, Overrides::default()).is_err());
        assert!(derive_params(3, 0.1, 0.0, 100, Overrides::default()).is_err());
        assert!(derive_params(3, 0.1, 1.0, 1, Overrides::default()).is_err());
        let bad = Overrides {
            t: Some(0),
            ..Overrides::default()
        };
        assert!(derive_params(3, 0.1, 1.0, 100, bad).is_err());
    }

    #[test]
    fn params_json_with_unbounded_thresholds() {
        let p = derive_params_log(3, 0.1, 10.0, 1000.0, Overrides::default()).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"size_threshold\":null"));
        let back: ClassParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn trees_are_sparse() {
        let tree = Graph::from_edges(30, (1..30).map(|i| ((i - 1) / 2, i))).unwrap();
        let r = check_sparsity(&tree, 0.01, 30).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.tier, SparsityTier::GlobalDensity);
        assert_eq!(
            check_sparsity(&path(5), 0.01, 5).unwrap().verdict,
            Verdict::Pass
        );
    }

    #[test]
    fn diamond_violates() {
        let r = check_sparsity(&diamond(), 0.2, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.mode, Mode::Exact);
        assert_eq!(r.witness, Some(vec![0, 1, 2, 3]));
        assert_eq!(r.witness_edges, Some(5));
    }

    #[test]
    fn hexagon_passes_below_its_length() {
        let r = check_sparsity(&cycle(6), 0.1, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.mode, Mode::Exact);
    }

    fn chorded_cycle(n: usize, chords: &[(usize, usize)]) -> Graph {
        let mut edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        edges.extend_from_slice(chords);
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn cycle_pairs_pass_when_short_cycles_are_far_apart() {
        // density 63/60 = 1 + delta, but the three 7-cycles are 14 apart
        let g = chorded_cycle(60, &[(0, 6), (20, 26), (40, 46)]);
        let r = check_sparsity(&g, 0.05, 12).unwrap();
        assert_eq!(
            (r.verdict, r.tier, r.mode),
            (Verdict::Pass, SparsityTier::CyclePairs, Mode::Exact)
        );
        assert_eq!(r.densest, Some(Ratio::new(21, 20)));
    }

    #[test]
    fn smallest_cycle_pair_finds_a_theta() {
        let g = chorded_cycle(40, &[(0, 6), (3, 9)]);
        let cycles = enumerate_cycles(&g, 12);
        assert_eq!(
            smallest_cycle_pair(&g, &cycles, 12),
            Some((0..10).collect())
        );
        assert_eq!(smallest_cycle_pair(&g, &cycles, 9), None);
    }

    #[test]
    fn disjoint_cycles_need_their_connecting_path() {
        let g = disjoint_union(&two_triangles_with_path(3), &cycle(20));
        let r = check_sparsity(&g, 0.1, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witness.unwrap(), (0..8).collect::<Vec<_>>());
        let r = check_sparsity(&g, 0.1, 7).unwrap();
        assert_eq!(
            (r.verdict, r.tier),
            (Verdict::Pass, SparsityTier::CyclePairs)
        );
        let cycles = enumerate_cycles(&g, 8);
        assert_eq!(smallest_cycle_pair(&g, &cycles, 8), Some((0..8).collect()));
    }

    #[test]
    fn ball_tier_on_a_random_cubic_graph() {
        // delta * limit > 1 and the whole graph is dense, but balls are trees
        // plus a few cycles
        let g = sample_indexed(&SamplerConfig::new(200, 3, 3), 0)
            .unwrap()
            .graph;
        let r = check_sparsity(&g, 0.3, 8).unwrap();
        assert_eq!(
            (r.verdict, r.tier, r.mode),
            (Verdict::Pass, SparsityTier::BallDensity, Mode::Conservative)
        );
    }

    #[test]
    fn k4_is_a_member_under_scaled_parameters() {
        let o = Overrides {
            t: Some(4),
            delta: Some(0.25),
            size_threshold: Some(3.0),
            cycle_bound: Some(5.0),
            r: None,
        };
        let p = scaled(3, 10.0, 4, o);
        let rep = check_membership(&complete(4), &p).unwrap();
        assert_eq!(rep.sparsity.verdict, Verdict::Pass);
        assert_eq!(rep.diameter.diameter, Distance::finite(1));
        assert_eq!(rep.cycles.count, 4);
        assert_eq!(rep.expansion.value, 2.0);
        assert_eq!(rep.member, Verdict::Pass);
    }

    #[test]
    fn two_regular_input_is_rejected() {
        assert!(derive_params(2, 0.1, 10.0, 6, Overrides::default()).is_err());
        // with d = 3 parameters a 2-regular graph is not a member
        let p = scaled(
            3,
            10.0,
            6,
            Overrides {
                t: Some(4),
                ..Overrides::default()
            },
        );
        let rep = check_membership(&cycle(6), &p).unwrap();
        assert!(!rep.regular);
        assert_eq!(rep.member, Verdict::Fail);
    }

    #[test]
    fn long_path_fails_the_diameter_condition() {
        let g = two_triangles_with_path(20);
        let p = scaled(
            3,
            1.0,
            g.n() as u64,
            Overrides {
                t: Some(4),
                ..Overrides::default()
            },
        );
        let d = check_diameter(&g, &p);
        assert_eq!(d.verdict, Verdict::Fail);
        assert_eq!(d.diameter, Distance::finite(22));
        let w = d.witness.unwrap();
        assert_eq!(w.len(), 23);
        assert!(w.windows(2).all(|e| g.has_edge(e[0], e[1])));
    }

    #[test]
    fn vertex_count_mismatch() {
        let p = scaled(3, 10.0, 10, Overrides::default());
        assert!(check_membership(&complete(4), &p).is_err());
    }

    #[test]
    fn expansion_exact_matches_ratio_and_surfaces_boundary() {
        let p = scaled(3, 10.0, 10, Overrides::default());
        let e = check_expansion(&petersen(), &p).unwrap();
        assert_eq!(e.mode, Mode::Exact);
        let w = e.witness.unwrap();
        assert!(2 * w.len() <= 10);
        assert_eq!(e.boundary, Some(petersen().boundary_size(&w)));
        assert!((e.value - e.boundary.unwrap() as f64 / w.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn expansion_on_a_random_cubic_graph() {
        let g = sample_indexed(&SamplerConfig::new(200, 3, 1), 0)
            .unwrap()
            .graph;
        let p = scaled(3, 10.0, 200, Overrides::default());
        let e = check_expansion(&g, &p).unwrap();
        assert_eq!((e.verdict, e.mode), (Verdict::Pass, Mode::Conservative));
        // a tiny M demands more expansion than three edges per vertex allow
        let strict = scaled(3, 0.2, 200, Overrides::default());
        let e = check_expansion(&g, &strict).unwrap();
        assert_eq!(e.verdict, Verdict::Fail);
        let w = e.witness.unwrap();
        assert!((g.boundary_size(&w) as f64 / w.len() as f64) < 5.0);
    }

    #[test]
    fn monotonicity_in_delta_and_m() {
        let g = sample_indexed(&SamplerConfig::new(16, 3, 4), 0)
            .unwrap()
            .graph;
        let mut last = Verdict::Fail;
        for k in 1..=12 {
            let v = check_sparsity(&g, 0.05 * k as f64, 10).unwrap().verdict;
            assert!(!(last == Verdict::Pass && v == Verdict::Fail));
            last = v;
        }
        let mut failed = false;
        for m in [100.0, 10.0, 3.0, 1.0, 0.5, 0.3] {
            let v = check_expansion(&g, &scaled(3, m, 16, Overrides::default()))
                .unwrap()
                .verdict;
            assert!(!(failed && v == Verdict::Pass));
            failed |= v == Verdict::Fail;
        }
    }

    fn subsample_brute(g: &Graph, set: &[usize], delta: f64, limit: usize) -> bool {
        let (h, _) = g.induced_subgraph(set);
        brute_force_violator(&h, delta, limit).is_none()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn density_tier_pass_is_sound(seed in any::<u64>(), delta in 0.3f64..1.0, limit in 4usize..20) {
            let g = sample_indexed(&SamplerConfig::new(60, 3, seed), 0).unwrap().graph;
            let r = check_sparsity(&g, delta, limit).unwrap();
            if r.verdict == Verdict::Pass && r.tier == SparsityTier::GlobalDensity {
                let mut rng = crate::rng::stream(seed, 1);
                for _ in 0..4 {
                    let set = crate::rng::choose_distinct(&mut rng, 60, 20);
                    prop_assert!(subsample_brute(&g, &set, delta, limit));
                }
            }
        }

        #[test]
        fn cycle_pair_tier_agrees_with_brute_force(seed in any::<u64>(), limit in 5usize..12) {
            // a 22-vertex cubic graph is small enough for brute force on
            // its 20-vertex induced subgraphs and large enough to skip tier 1
            let g = sample_indexed(&SamplerConfig::new(22, 3, seed), 0).unwrap().graph;
            let delta = 1.0 / limit as f64;
            let r = check_sparsity(&g, delta, limit).unwrap();
            prop_assert!(r.verdict != Verdict::Inconclusive);
            if r.verdict == Verdict::Fail {
                let w = r.witness.unwrap();
                prop_assert!(w.len() <= limit);
                prop_assert!(violates(g.induced_edge_count(&w), w.len(), delta));
            } else {
                for drop in [(0, 1), (5, 6), (20, 21)] {
                    let keep: Vec<usize> = (0..22).filter(|&v| v != drop.0 && v != drop.1).collect();
                    prop_assert!(subsample_brute(&g, &keep, delta, limit));
                }
            }
        }
    }
}
