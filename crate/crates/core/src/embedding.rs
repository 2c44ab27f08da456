//! Chart embeddings, the two-set partition of unity, kernel gluing and the
//! assembled asymptotic-embedding kernel with its certificate.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassParams;
use crate::decomposition::{
    build_decomposition, chart_dense_part, lebesgue_number, verify_decomposition, ChartChecks,
    DecompositionReport,
};
use crate::error::{Error, Result};
use crate::graph::{Distance, Graph, MetricTable};
use crate::kernel::{
    decay_to_distortion, distortion_to_decay, is_cnd, DecayFunction, DistortionPair, Kernel,
    Monotone, PositiveKernel,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

/// Finite-dimensional coordinates for a labelled point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub labels: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub norm: Norm,
    /// Envelopes of `|f(x) - f(y)|` against the graph distance.
    pub distortion: DistortionPair,
    /// `max ratio / min ratio` of `|f(x) - f(y)| / d(x, y)` over distinct
    /// pairs; 1 for at most one point.
    pub max_distortion: f64,
}

/// `rho_minus(s) = min{v : d >= s}` and `rho_plus(s)` the larger of
/// `max{v : d <= s}` and `rho_minus(s)`, sampled at every integer `s` up to the largest finite distance.
pub fn measured_envelopes(values: &[f64], dist: &[f64]) -> Result<DistortionPair> {
    let d_max = dist
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max)
        .ceil() as usize;
    let mut hi = vec![0.0f64; d_max + 1];
    let mut lo = vec![f64::INFINITY; d_max + 1];
    for (&v, &d) in values.iter().zip(dist) {
        if !d.is_finite() {
            continue;
        }
        let s = d.ceil() as usize;
        hi[s] = hi[s].max(v);
        let f = d.floor() as usize;
        lo[f] = lo[f].min(v);
    }
    for s in 1..=d_max {
        hi[s] = hi[s].max(hi[s - 1]);
    }
    for s in (0..d_max).rev() {
        lo[s] = lo[s].min(lo[s + 1]);
    }
    let lo: Vec<f64> = lo
        .into_iter()
        .map(|x| if x.is_finite() { x } else { 0.0 })
        .collect();
    // distances missing from the table leave `lo` above `hi`
    for (h, l) in hi.iter_mut().zip(&lo) {
        *h = h.max(*l);
    }
    let lower = Monotone::new(
        lo.iter().enumerate().map(|(s, &y)| (s as f64, y)).collect(),
        1.0,
    )?;
    let upper = Monotone::new(
        hi.iter().enumerate().map(|(s, &y)| (s as f64, y)).collect(),
        1.0,
    )?;
    DistortionPair::new(lower, upper)
}

fn distance_table(metric: &MetricTable, labels: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(labels.len() * labels.len());
    for &x in labels {
        for &y in labels {
            out.push(metric.get(x, y).as_f64());
        }
    }
    out
}

fn pair_distortion(values: &[f64], dist: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (&v, &d) in values.iter().zip(dist) {
        if d > 0.0 && d.is_finite() {
            lo = lo.min(v / d);
            hi = hi.max(v / d);
        }
    }
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// Path indicators of a BFS spanning tree rooted at 0 (neighbours in
/// increasing order): coordinate `c - 1` is 1 when the tree edge above
/// vertex `c` lies on the root path, so the l1 distance is the tree
/// distance.
pub fn embed_tree_l1(h: &Graph) -> Result<Embedding> {
    let n = h.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !h.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([0]);
    parent[0] = 0;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        let mut nb = h.neighbors(v).to_vec();
        nb.sort_unstable();
        for w in nb {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let dim = n - 1;
    let mut coords = vec![Vec::new(); n];
    coords[0] = vec![0.0; dim];
    for &v in &order[1..] {
        let mut c = coords[parent[v]].clone();
        c[v - 1] = 1.0;
        coords[v] = c;
    }
    let labels: Vec<usize> = (0..n).collect();
    let metric = MetricTable::from_graph(h);
    let k = l_norm_table(&coords, Norm::L1);
    let dist = distance_table(&metric, &labels);
    Ok(Embedding {
        distortion: measured_envelopes(&k, &dist)?,
        max_distortion: pair_distortion(&k, &dist),
        labels,
        coords,
        norm: Norm::L1,
    })
}

fn l_norm_table(coords: &[Vec<f64>], norm: Norm) -> Vec<f64> {
    let m = coords.len();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let v = match norm {
                Norm::L1 => coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>(),
                Norm::L2 => coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt(),
            };
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    out
}

/// `K(x, y) = |f(x) - f(y)|` in the embedding's norm.
pub fn kernel_from_embedding(e: &Embedding) -> Kernel {
    Kernel::new(e.labels.clone(), l_norm_table(&e.coords, e.norm))
        .expect("norm tables are valid kernels")
}

/// `phi_1^2 + phi_2^2 = 1` with `phi_i` supported in `V_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub r: f64,
    pub delta: Option<f64>,
    pub c: f64,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    /// `max |phi_i(x) - phi_i(y)|` over `d(x, y) <= r`.
    pub oscillation: f64,
    /// `sqrt(2 r / C)`.
    pub oscillation_bound: f64,
    pub max_square_error: f64,
}

impl PartitionOfUnity {
    pub fn weights(&self, x: usize) -> (f64, f64) {
        (self.phi1[x], self.phi2[x])
    }
}

fn lebesgue_from_metric(metric: &MetricTable, v1: &[usize], v2: &[usize]) -> Distance {
    let n = metric.n();
    let rest = |set: &[usize]| {
        let mut m = vec![true; n];
        set.iter().for_each(|&v| m[v] = false);
        (0..n).filter(|&v| m[v]).collect::<Vec<_>>()
    };
    let (r1, r2) = (rest(v1), rest(v2));
    (0..n)
        .map(|x| {
            metric
                .distance_to_set(x, &r1)
                .max(metric.distance_to_set(x, &r2))
        })
        .min()
        .unwrap_or(Distance::INFINITE)
}

/// Partition of unity at scale `C = 4 r / delta^2`, which must not
/// exceed the Lebesgue number of the cover.
pub fn partition_of_unity(
    metric: &MetricTable,
    v1: &[usize],
    v2: &[usize],
    r: f64,
    delta: f64,
) -> Result<PartitionOfUnity> {
    if !(delta > 0.0 && delta <= 1.0) || !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need r > 0 and delta in (0, 1], got r = {r}, delta = {delta}"
        )));
    }
    let mut pou = partition_of_unity_at(metric, v1, v2, 4.0 * r / (delta * delta), r)?;
    pou.delta = Some(delta);
    if pou.oscillation >= delta {
        return Err(Error::Internal(format!(
            "oscillation {} is not below delta = {delta}",
            pou.oscillation
        )));
    }
    Ok(pou)
}

/// Partition of unity at an explicit scale `C`, with the oscillation
/// measured over pairs at distance at most `r`.
pub fn partition_of_unity_at(
    metric: &MetricTable,
    v1: &[usize],
    v2: &[usize],
    c: f64,
    r: f64,
) -> Result<PartitionOfUnity> {
    let n = metric.n();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale C = {c} must be positive and finite"
        )));
    }
    let leb = lebesgue_from_metric(metric, v1, v2);
    if leb.as_f64() < c {
        return Err(Error::Precondition(format!(
            "scale C = {c} exceeds the Lebesgue number {leb}"
        )));
    }
    let member = |set: &[usize]| {
        let mut m = vec![false; n];
        set.iter().for_each(|&v| m[v] = true);
        m
    };
    let (in1, in2) = (member(v1), member(v2));
    let outside = |m: &[bool]| (0..n).filter(|&v| !m[v]).collect::<Vec<_>>();
    let (out1, out2) = (outside(&in1), outside(&in2));
    let interior = |set: &[usize], out: &[usize]| {
        set.iter()
            .copied()
            .filter(|&x| metric.distance_to_set(x, out).as_f64() >= c)
            .collect::<Vec<_>>()
    };
    let (int1, int2) = (interior(v1, &out1), interior(v2, &out2));
    let psi = |int: &[usize]| {
        (0..n)
            .map(|x| (1.0 - metric.distance_to_set(x, int).as_f64() / c).max(0.0))
            .collect::<Vec<f64>>()
    };
    let (psi1, psi2) = (psi(&int1), psi(&int2));
    let mut phi1 = vec![0.0; n];
    let mut phi2 = vec![0.0; n];
    let mut max_square_error = 0.0f64;
    for x in 0..n {
        let s = psi1[x] + psi2[x];
        if s <= 0.0 {
            return Err(Error::Internal(format!("psi_1 + psi_2 vanishes at {x}")));
        }
        phi1[x] = (psi1[x] / s).sqrt();
        phi2[x] = (psi2[x] / s).sqrt();
        max_square_error =
            max_square_error.max((phi1[x] * phi1[x] + phi2[x] * phi2[x] - 1.0).abs());
        if (phi1[x] > 0.0 && !in1[x]) || (phi2[x] > 0.0 && !in2[x]) {
            return Err(Error::Internal(format!(
                "partition of unity leaves its support at {x}"
            )));
        }
    }
    if max_square_error > 1e-12 {
        return Err(Error::Internal(format!(
            "phi_1^2 + phi_2^2 deviates from 1 by {max_square_error}"
        )));
    }
    let mut oscillation = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            if metric.get(x, y).as_f64() <= r {
                oscillation = oscillation
                    .max((phi1[x] - phi1[y]).abs())
                    .max((phi2[x] - phi2[y]).abs());
            }
        }
    }
    Ok(PartitionOfUnity {
        v1: v1.to_vec(),
        v2: v2.to_vec(),
        r,
        delta: None,
        c,
        psi1,
        psi2,
        phi1,
        phi2,
        oscillation,
        oscillation_bound: (2.0 * r / c).sqrt(),
        max_square_error,
    })
}

fn positions(labels: &[usize], n: usize) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (i, &l) in labels.iter().enumerate() {
        pos[l] = i;
    }
    pos
}

/// `k(x, y) = phi_1(x) k_1(x, y) phi_1(y) + phi_2(x) k_2(x, y) phi_2(y)` on
/// `0..n`, where `k_i` is labelled by vertices of `V_i`.
pub fn glue_kernels(
    pou: &PartitionOfUnity,
    k1: &PositiveKernel,
    k2: &PositiveKernel,
) -> Result<PositiveKernel> {
    let n = pou.phi1.len();
    let (p1, p2) = (positions(k1.labels(), n), positions(k2.labels(), n));
    for (set, pos, name) in [(&pou.v1, &p1, "k1"), (&pou.v2, &p2, "k2")] {
        if let Some(&v) = set.iter().find(|&&v| pos[v] == usize::MAX) {
            return Err(Error::InvalidParameter(format!(
                "{name} has no entry for vertex {v}"
            )));
        }
    }
    let mut values = vec![0.0; n * n];
    for x in 0..n {
        for y in x..n {
            let mut v = 0.0;
            if pou.phi1[x] > 0.0 && pou.phi1[y] > 0.0 {
                v += pou.phi1[x] * k1.get(p1[x], p1[y]) * pou.phi1[y];
            }
            if pou.phi2[x] > 0.0 && pou.phi2[y] > 0.0 {
                v += pou.phi2[x] * k2.get(p2[x], p2[y]) * pou.phi2[y];
            }
            values[x * n + y] = v.min(1.0);
            values[y * n + x] = v.min(1.0);
        }
        if (values[x * n + x] - 1.0).abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "glued diagonal at {x} is {}",
                values[x * n + x]
            )));
        }
        values[x * n + x] = 1.0;
    }
    PositiveKernel::new((0..n).collect(), values)
}

/// Documented family of subsets on which the final kernel is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub vertices: Vec<usize>,
    /// Smallest eigenvalue of the anchored transform.
    pub min_eigenvalue: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFamily {
    pub ball_radius: u32,
    pub balls: usize,
    pub sampled: usize,
    pub seed: u64,
    pub checks: Vec<SubsetCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// No short cycles: the graph metric itself.
    GraphMetric,
    /// Everything lies near a short cycle: the chart kernel alone.
    ChartOnly,
    Glued,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::GraphMetric => "graph_metric",
            Branch::ChartOnly => "chart_only",
            Branch::Glued => "glued",
        }
    }
}

/// One `(r, delta) = (n, 2^-n)` step of the assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub n: usize,
    pub delta: f64,
    pub t1: f64,
    pub t2: f64,
    /// `max (1 - k)` over pairs at distance at most `n`.
    pub deficit: f64,
    /// `false` when the constant kernel was used instead.
    pub glued: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub c: f64,
    pub lebesgue: Distance,
    pub max_square_error: f64,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    pub sample_budget: usize,
    pub seed: u64,
    pub tol: f64,
    /// Subset scale `R`; defaults to the parameters' value.
    pub r: Option<f64>,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            sample_budget: 200,
            seed: 0,
            tol: 1e-9,
            r: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub graph: Graph,
    pub params: ClassParams,
    pub scale: f64,
    pub tol: f64,
    pub branch: Option<Branch>,
    pub kernel: Option<Kernel>,
    /// Bounds the kernel is certified against.
    pub distortion: Option<DistortionPair>,
    /// Envelopes of the kernel actually observed.
    pub observed: Option<DistortionPair>,
    pub decomposition: DecompositionReport,
    pub chart: Option<ChartChecks>,
    pub chart_distortion: Option<f64>,
    pub partition: Option<PartitionSummary>,
    pub grid: Vec<GridEntry>,
    pub symmetric: bool,
    pub sandwich_violations: Vec<(usize, usize)>,
    pub subsets: Option<SubsetFamily>,
    pub min_eigenvalue: Option<f64>,
    pub failures: Vec<String>,
    pub valid: bool,
}

/// Builds the kernel (decomposition, chart embedding, exponential
/// transforms, gluing, summation) and checks symmetry, the distortion
/// sandwich and conditional negativity on all balls of radius `R/2` plus
/// `sample_budget` random subsets of diameter at most `R`.
pub fn assemble_asymptotic_kernel(
    g: &Graph,
    p: &ClassParams,
    opts: &AssembleOptions,
) -> Result<EmbeddingCertificate> {
    if g.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be nonnegative",
            opts.tol
        )));
    }
    let scale = opts.r.unwrap_or(p.r);
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale R = {scale} must be finite and nonnegative"
        )));
    }
    let dec = build_decomposition(g, p)?;
    let report = verify_decomposition(&dec);
    let mut cert = EmbeddingCertificate {
        graph: g.clone(),
        params: p.clone(),
        scale,
        tol: opts.tol,
        branch: None,
        kernel: None,
        distortion: None,
        observed: None,
        decomposition: report.clone(),
        chart: None,
        chart_distortion: None,
        partition: None,
        grid: Vec::new(),
        symmetric: false,
        sandwich_violations: Vec::new(),
        subsets: None,
        min_eigenvalue: None,
        failures: Vec::new(),
        valid: false,
    };
    for (name, claim) in [
        ("lebesgue", &report.lebesgue),
        ("girth", &report.girth),
        ("quasi_isometry", &report.quasi_isometry),
        ("separation", &report.separation),
        ("pruned_connected", &report.pruned_connected),
    ] {
        if !claim.pass {
            cert.failures
                .push(format!("decomposition {name}: {}", claim.detail));
        }
    }
    if !cert.failures.is_empty() {
        return Ok(cert);
    }

    let n = g.n();
    let metric = MetricTable::from_graph(g);
    let diam = metric.diameter().value().expect("connected") as usize;
    let vertices: Vec<usize> = (0..n).collect();
    let dist_all = distance_table(&metric, &vertices);

    let (kernel, rho) = if dec.v1.is_empty() {
        cert.branch = Some(Branch::GraphMetric);
        (
            Kernel::new(vertices.clone(), dist_all.clone())?,
            DistortionPair::identity(),
        )
    } else {
        let chart = chart_dense_part(&dec, p.delta)?;
        cert.chart = chart.checks.clone();
        if !chart.verified() {
            cert.failures.push("chart bounds not met".into());
            return Ok(cert);
        }
        let emb = embed_tree_l1(&chart.h)?;
        cert.chart_distortion = Some(emb.max_distortion);
        let k_chart = kernel_from_embedding(&emb);
        let pos = positions(&chart.u, n);
        let s_pos: Vec<usize> = dec.v1.iter().map(|&v| pos[v]).collect();
        let restricted = k_chart.restrict(&s_pos);
        let k1 = Kernel::new(dec.v1.clone(), restricted.values().to_vec())?;
        let dist1 = distance_table(&metric, &dec.v1);
        let rho1 = measured_envelopes(k1.values(), &dist1)?;
        if dec.v2.is_empty() {
            cert.branch = Some(Branch::ChartOnly);
            let k = Kernel::new(vertices.clone(), k1.values().to_vec())?;
            (k, rho1)
        } else {
            cert.branch = Some(Branch::Glued);
            let dl = MetricTable::from_graph(&dec.pruned);
            let k2 = Kernel::new(dec.v2.clone(), distance_table(&dl, &dec.v2))?;
            let dist2 = distance_table(&metric, &dec.v2);
            let rho2 =
                DistortionPair::new(Monotone::affine(0.0, 1.0)?, Monotone::affine(0.0, 3.0)?)?;
            let leb = lebesgue_number(g, &[&dec.v1, &dec.v2]);
            let c = leb.as_f64().min(diam.max(1) as f64);
            let pou = partition_of_unity_at(&metric, &dec.v1, &dec.v2, c, 1.0)?;
            cert.partition = Some(PartitionSummary {
                c,
                lebesgue: leb,
                max_square_error: pou.max_square_error,
                oscillation: pou.oscillation,
            });
            let steps: Vec<Result<(GridEntry, PositiveKernel, DecayFunction)>> = (1..=diam)
                .into_par_iter()
                .map(|step| {
                    let delta = 0.5f64.powi(step as i32);
                    let r = step as f64;
                    let d1 = distortion_to_decay(&rho1, &k1, &dist1, r, delta / 3.0)?;
                    let d2 = distortion_to_decay(&rho2, &k2, &dist2, r, delta / 3.0)?;
                    let glued = glue_kernels(&pou, &d1.kernel, &d2.kernel)?;
                    let mut deficit = 0.0f64;
                    for (v, d) in glued.values().iter().zip(&dist_all) {
                        if *d <= r {
                            deficit = deficit.max(1.0 - v);
                        }
                    }
                    let entry = GridEntry {
                        n: step,
                        delta,
                        t1: d1.t,
                        t2: d2.t,
                        deficit,
                        glued: deficit < delta,
                    };
                    if entry.glued {
                        let points = (0..=diam)
                            .map(|s| {
                                let s = s as f64;
                                let g1 = (-d1.t * rho1.lower.eval(s)).exp();
                                let g2 = (-d2.t * rho2.lower.eval(s)).exp();
                                (s, g1.max(g2))
                            })
                            .collect();
                        Ok((entry, glued, DecayFunction::new(points)?))
                    } else {
                        Ok((
                            entry,
                            PositiveKernel::ones(vertices.clone()),
                            DecayFunction::constant(1.0, diam as f64)?,
                        ))
                    }
                })
                .collect();
            let mut family = BTreeMap::new();
            for (i, s) in steps.into_iter().enumerate() {
                let (entry, k, gamma) = s?;
                cert.grid.push(entry);
                family.insert(i + 1, (k, gamma));
            }
            if family.is_empty() {
                (Kernel::zeros(vertices.clone()), DistortionPair::identity())
            } else {
                decay_to_distortion(&family, diam, &dist_all)?
            }
        }
    };

    cert.observed = Some(measured_envelopes(kernel.values(), &dist_all)?);
    cert.kernel = Some(kernel);
    cert.distortion = Some(rho);
    finish_checks(&mut cert, &metric, opts);
    Ok(cert)
}

fn finish_checks(cert: &mut EmbeddingCertificate, metric: &MetricTable, opts: &AssembleOptions) {
    let k = cert.kernel.as_ref().expect("kernel set");
    let n = k.m();
    let dist = distance_table(metric, &(0..n).collect::<Vec<_>>());
    cert.symmetric = symmetric_with_zero_diagonal(k);
    if !cert.symmetric {
        cert.failures
            .push("kernel is not symmetric with zero diagonal".into());
    }
    cert.sandwich_violations = cert
        .distortion
        .as_ref()
        .expect("distortion set")
        .violations(k, &dist);
    if !cert.sandwich_violations.is_empty() {
        cert.failures.push(format!(
            "{} pairs violate the distortion bounds",
            cert.sandwich_violations.len()
        ));
    }
    let family = subset_family(metric, cert.scale, opts.sample_budget, opts.seed);
    let checks: Vec<SubsetCheck> = family
        .par_iter()
        .map(|s| check_subset(k, s, opts.tol))
        .collect();
    let bad = checks.iter().filter(|c| !c.pass).count();
    if bad > 0 {
        cert.failures
            .push(format!("{bad} subsets fail conditional negativity"));
    }
    cert.min_eigenvalue = checks.iter().map(|c| c.min_eigenvalue).reduce(f64::min);
    let ball_radius = (cert.scale / 2.0).floor() as u32;
    cert.subsets = Some(SubsetFamily {
        ball_radius,
        balls: n,
        sampled: family.len() - n,
        seed: opts.seed,
        checks,
    });
    cert.valid = cert.failures.is_empty();
}

fn symmetric_with_zero_diagonal(k: &Kernel) -> bool {
    let m = k.m();
    (0..m).all(|i| {
        k.get(i, i) == 0.0 && (0..m).all(|j| k.get(i, j) == k.get(j, i) && k.get(i, j) >= 0.0)
    })
}

fn check_subset(k: &Kernel, vertices: &[usize], tol: f64) -> SubsetCheck {
    let res = is_cnd(&k.restrict(vertices), tol).expect("valid tolerance");
    SubsetCheck {
        vertices: vertices.to_vec(),
        min_eigenvalue: res.min_eigenvalue,
        threshold: res.threshold,
        pass: res.holds,
    }
}

/// All balls of radius `floor(R/2)` in vertex order, then `budget` subsets
/// of diameter at most `R`: stream `i` of `derive_seed(seed, 1)` picks a
/// centre, shuffles its `R`-ball and keeps each vertex within `R` of all
/// vertices kept so far, up to a random size of at least 2.
pub fn subset_family(
    metric: &MetricTable,
    scale: f64,
    budget: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n = metric.n();
    let reach = scale.floor().max(0.0) as u32;
    let mut out: Vec<Vec<usize>> = (0..n).map(|x| metric.ball(x, reach / 2)).collect();
    let key = rng::derive_seed(seed, 1);
    let sampled: Vec<Vec<usize>> = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(key, i);
            let centre = rng::index(&mut r, n);
            let mut ball = metric.ball(centre, reach);
            rng::shuffle(&mut r, &mut ball);
            let target = if ball.len() <= 2 {
                ball.len()
            } else {
                2 + rng::index(&mut r, ball.len() - 1)
            };
            let mut kept: Vec<usize> = Vec::with_capacity(target);
            for v in ball {
                if kept.len() == target {
                    break;
                }
                if kept
                    .iter()
                    .all(|&w| metric.get(v, w).value().is_some_and(|d| d <= reach))
                {
                    kept.push(v);
                }
            }
            kept.sort_unstable();
            kept
        })
        .collect();
    out.extend(sampled);
    out
}

/// Outcome of re-running the certificate checks from its serialized data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recheck {
    pub symmetric: bool,
    pub sandwich: bool,
    pub subsets: bool,
    pub family_matches: bool,
    pub valid: bool,
}

/// Recomputes symmetry, the sandwich bounds, every recorded subset check
/// and the subset family itself from a certificate.
pub fn recheck_certificate(cert: &EmbeddingCertificate) -> Result<Recheck> {
    let (Some(k), Some(rho), Some(fam)) = (&cert.kernel, &cert.distortion, &cert.subsets) else {
        return Ok(Recheck {
            symmetric: false,
            sandwich: false,
            subsets: false,
            family_matches: false,
            valid: false,
        });
    };
    let metric = MetricTable::from_graph(&cert.graph);
    let n = metric.n();
    if k.m() != n {
        return Err(Error::InvalidKernel(format!(
            "kernel has {} points, graph has {n}",
            k.m()
        )));
    }
    let dist = distance_table(&metric, &(0..n).collect::<Vec<_>>());
    let symmetric = symmetric_with_zero_diagonal(k);
    let sandwich = rho.violations(k, &dist).is_empty();
    let subsets = fam.checks.par_iter().all(|c| {
        let again = check_subset(k, &c.vertices, cert.tol);
        again.pass && c.pass
    });
    let expected = subset_family(&metric, cert.scale, fam.sampled, fam.seed);
    let family_matches = expected.len() == fam.checks.len()
        && expected
            .iter()
            .zip(&fam.checks)
            .all(|(a, c)| *a == c.vertices);
    let valid = symmetric && sandwich && subsets && family_matches && cert.valid;
    Ok(Recheck {
        symmetric,
        sandwich,
        subsets,
        family_matches,
        valid,
    })
}
