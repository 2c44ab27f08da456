use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;

/// Largest order for which the edge-boundary ratio is computed exactly.
pub const EXACT_EXPANSION_LIMIT: usize = 20;

/// Dense row-major adjacency matrix.
pub fn adjacency_matrix(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut a = vec![0.0; n * n];
    for &(u, v) in g.edges() {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    a
}

fn require_connected_regular(g: &Graph) -> Result<usize> {
    if g.n() < 2 {
        return Err(Error::InvalidParameter(
            "spectral gap needs at least two vertices".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let d = g.degree(0);
    if let Some(v) = (0..g.n()).find(|&v| g.degree(v) != d) {
        return Err(Error::NotRegular {
            vertex: v,
            degree: g.degree(v),
            expected: d,
        });
    }
    Ok(d)
}

/// Second-largest adjacency eigenvalue of a connected regular graph.
pub fn spectral_gap(g: &Graph) -> Result<f64> {
    require_connected_regular(g)?;
    let eig = SymmetricEigen::new(&adjacency_matrix(g), g.n())?;
    let values = eig.values();
    Ok(values[values.len() - 2])
}

/// Best prefix cut `|S| <= n/2` of the vertex order given by an eigenvector
/// for the second-largest adjacency eigenvalue. Returns the ratio
/// `|dS|/|S|` and the sorted set.
pub fn sweep_cut(g: &Graph) -> Result<(Ratio<u64>, Vec<usize>)> {
    require_connected_regular(g)?;
    let n = g.n();
    let eig = SymmetricEigen::new(&adjacency_matrix(g), n)?;
    let x = eig.eigenvector(n - 2);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut best: Option<(Ratio<u64>, Vec<usize>)> = None;
    for side in [order.clone(), order.into_iter().rev().collect::<Vec<_>>()] {
        let mut member = vec![false; n];
        let mut boundary: i64 = 0;
        for (k, &v) in side.iter().take(n / 2).enumerate() {
            for &w in g.neighbors(v) {
                boundary += if member[w] { -1 } else { 1 };
            }
            member[v] = true;
            let ratio = Ratio::new(boundary as u64, k as u64 + 1);
            if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
                let mut set = side[..=k].to_vec();
                set.sort_unstable();
                best = Some((ratio, set));
            }
        }
    }
    best.ok_or_else(|| Error::Internal("sweep over an empty order".into()))
}

/// Whether an [`ExpansionResult`] is an exact minimum or a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    Exact,
    SpectralBound,
}

/// `min |dS|/|S|` over `0 < |S| <= n/2`, or the bound `(d - lambda2)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub kind: ExpansionKind,
    pub value: f64,
    /// Exact ratio (exact mode only).
    pub ratio: Option<Ratio<u64>>,
    /// Minimising set (exact mode only).
    pub witness: Option<Vec<usize>>,
}

pub fn edge_boundary_ratio(g: &Graph) -> Result<ExpansionResult> {
    edge_boundary_ratio_with_limit(g, EXACT_EXPANSION_LIMIT)
}

/// Exact brute force when `n <= limit` (at most 30), otherwise the spectral
/// lower bound.
pub fn edge_boundary_ratio_with_limit(g: &Graph, limit: usize) -> Result<ExpansionResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "edge expansion needs at least two vertices".into(),
        ));
    }
    if n > limit.min(30) {
        let d = require_connected_regular(g)? as f64;
        let lambda2 = spectral_gap(g)?;
        return Ok(ExpansionResult {
            kind: ExpansionKind::SpectralBound,
            value: (d - lambda2) / 2.0,
            ratio: None,
            witness: None,
        });
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let mut best: Option<(Ratio<u64>, u32)> = None;
    for set in 1u32..(1 << n) {
        let size = set.count_ones() as usize;
        if 2 * size > n {
            continue;
        }
        let mut boundary = 0u64;
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            boundary += u64::from((adj[v] & !set).count_ones());
            rest &= rest - 1;
        }
        let ratio = Ratio::new(boundary, size as u64);
        if best.is_none_or(|(b, _)| ratio < b) {
            best = Some((ratio, set));
        }
    }
    let (ratio, set) = best.expect("n >= 2 admits a singleton");
    let witness = (0..n).filter(|&v| set & (1 << v) != 0).collect();
    Ok(ExpansionResult {
        kind: ExpansionKind::Exact,
        value: *ratio.numer() as f64 / *ratio.denom() as f64,
        ratio: Some(ratio),
        witness: Some(witness),
    })
}
