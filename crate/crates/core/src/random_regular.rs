//! Uniform random `d`-regular graphs by the pairing model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

pub const DEFAULT_MAX_REJECTIONS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub max_rejections: u64,
}

impl SamplerConfig {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        SamplerConfig {
            n,
            d,
            seed,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParameter(format!(
                "degree d = {} must be at least 3",
                self.d
            )));
        }
        if self.n <= self.d {
            return Err(Error::InvalidParameter(format!(
                "need n > d, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if (self.n * self.d) % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "n*d = {} is odd",
                self.n * self.d
            )));
        }
        Ok(())
    }
}

/// An accepted pairing and the work it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub graph: Graph,
    /// Pairings drawn, including the accepted one.
    pub attempts: u64,
    /// Rejected pairings whose first defect was a loop.
    pub loops: u64,
    /// Rejected pairings whose first defect was a parallel edge.
    pub multi: u64,
}

/// Sample number 0 of the configured stream.
pub fn sample_regular_graph(cfg: &SamplerConfig) -> Result<Graph> {
    sample_indexed(cfg, 0).map(|s| s.graph)
}

/// Draws uniform pairings of the `n d` half-edges from stream `index` until
/// one is simple. Vertex `v` owns half-edges `v d .. (v + 1) d`.
pub fn sample_indexed(cfg: &SamplerConfig, index: u64) -> Result<Sample> {
    cfg.validate()?;
    let (n, d) = (cfg.n, cfg.d);
    let mut r = rng::stream(cfg.seed, index);
    let mut points: Vec<usize> = (0..n * d).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    let (mut loops, mut multi) = (0, 0);
    for attempt in 1..=cfg.max_rejections.max(1) {
        for (p, slot) in points.iter_mut().enumerate() {
            *slot = p;
        }
        rng::shuffle(&mut r, &mut points);
        adj.iter_mut().for_each(Vec::clear);
        let mut edges = Vec::with_capacity(n * d / 2);
        let mut ok = true;
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0] / d, pair[1] / d);
            if u == v {
                loops += 1;
                ok = false;
                break;
            }
            if adj[u].contains(&v) {
                multi += 1;
                ok = false;
                break;
            }
            adj[u].push(v);
            adj[v].push(u);
            edges.push((u.min(v), u.max(v)));
        }
        if ok {
            let graph = Graph::from_edges(n, edges)?.with_declared_degree(d)?;
            return Ok(Sample {
                graph,
                attempts: attempt,
                loops,
                multi,
            });
        }
    }
    Err(Error::RejectionBudget {
        attempts: cfg.max_rejections,
        loops,
        multi,
    })
}

/// Samples `0..count` in parallel, returned in index order.
pub fn sample_batch(cfg: &SamplerConfig, count: usize) -> Vec<Result<Sample>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_indexed(cfg, i))
        .collect()
}

/// Leading-order expected number of `r`-cycles, `(d-1)^r / (2r)`.
pub fn expected_cycle_count(d: usize, r: usize) -> Result<f64> {
    if d < 3 || r < 3 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 3 and r >= 3, got d = {d}, r = {r}"
        )));
    }
    Ok(((d - 1) as f64).powi(r as i32) / (2 * r) as f64)
}
