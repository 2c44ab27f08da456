//! Seeded batch experiments over random regular graphs: cycle statistics,
//! class-membership rates and certified kernels, with CSV/JSON export.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    check_membership, check_s_epsilon, derive_params, ClassParams, ClassReport, Overrides, Verdict,
};
use crate::embedding::{assemble_asymptotic_kernel, AssembleOptions, Branch, EmbeddingCertificate};
use crate::error::{Error, Result};
use crate::graph::{
    count_cycles_by_length, edge_boundary_ratio_with_limit, spectral_gap, Graph, MetricTable,
};
use crate::random_regular::{
    expected_cycle_count, sample_indexed, SamplerConfig, DEFAULT_MAX_REJECTIONS,
};
use crate::report::{cell, fmt_g12, to_json_string, Table, SCHEMA_VERSION};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    Cycles,
    Classify,
    Pipeline,
}

/// Per-graph statistics computed by the cycle experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Cycles,
    Diameter,
    SpectralGap,
    Expansion,
    Sparsity,
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_m() -> f64 {
    10.0
}
fn default_lengths() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_statistics() -> Vec<Statistic> {
    vec![
        Statistic::Cycles,
        Statistic::Diameter,
        Statistic::SpectralGap,
        Statistic::Expansion,
        Statistic::Sparsity,
    ]
}
fn default_rejections() -> u64 {
    DEFAULT_MAX_REJECTIONS
}
fn default_z() -> f64 {
    3.0
}
fn default_trend_z() -> f64 {
    1.645
}
fn default_budget() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-9
}
fn default_exact_limit() -> usize {
    20
}
fn default_diameter_target() -> f64 {
    0.99
}

/// Experiment description; the TOML/JSON key set is exactly these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    /// Graph orders; several values form the grid (or the sequence `a_n`).
    pub n: Vec<usize>,
    pub d: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub overrides: Overrides,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lengths")]
    pub cycle_lengths: Vec<usize>,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    #[serde(default = "default_rejections")]
    pub max_rejections: u64,
    /// Mean statistics must lie within `z` standard errors of their target.
    #[serde(default = "default_z")]
    pub z: f64,
    /// One-sided critical value for the failure-rate trend test.
    #[serde(default = "default_trend_z")]
    pub trend_z: f64,
    /// Required fraction of samples with diameter within `M log_d n`.
    #[serde(default = "default_diameter_target")]
    pub diameter_target: f64,
    /// Exact edge expansion is computed up to this order.
    #[serde(default = "default_exact_limit")]
    pub exact_expansion_limit: usize,
    /// Random subsets checked per certificate.
    #[serde(default = "default_budget")]
    pub sample_budget: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Report destination, used by the command-line front end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn new(mode: ExperimentMode, n: Vec<usize>, d: usize, samples: usize, seed: u64) -> Self {
        ExperimentConfig {
            mode,
            n,
            d,
            epsilon: default_epsilon(),
            m: default_m(),
            overrides: Overrides::default(),
            samples,
            seed,
            cycle_lengths: default_lengths(),
            statistics: default_statistics(),
            max_rejections: default_rejections(),
            z: default_z(),
            trend_z: default_trend_z(),
            diameter_target: default_diameter_target(),
            exact_expansion_limit: default_exact_limit(),
            sample_budget: default_budget(),
            tol: default_tol(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.n.is_empty() {
            return bad("at least one graph order n is required".into());
        }
        for &n in &self.n {
            SamplerConfig {
                n,
                d: self.d,
                seed: self.seed,
                max_rejections: self.max_rejections,
            }
            .validate()?;
        }
        if self.cycle_lengths.iter().any(|&r| r < 3) {
            return bad("cycle lengths must be at least 3".into());
        }
        if !(self.z > 0.0 && self.trend_z > 0.0) {
            return bad("confidence multipliers must be positive".into());
        }
        if !(self.tol >= 0.0) {
            return bad("tolerance must be nonnegative".into());
        }
        Ok(())
    }

    /// Class parameters for order `n`.
    pub fn params(&self, n: usize) -> Result<ClassParams> {
        derive_params(
            self.d,
            self.epsilon,
            self.m,
            n as u64,
            self.overrides.clone(),
        )
    }

    fn sampler(&self, n: usize) -> SamplerConfig {
        SamplerConfig {
            n,
            d: self.d,
            seed: self.seed,
            max_rejections: self.max_rejections,
        }
    }

    /// `sum a_n^(-1 + 5 eps)` over the configured orders.
    pub fn alpha_sum(&self) -> f64 {
        self.n
            .iter()
            .map(|&a| (a as f64).powf(-1.0 + 5.0 * self.epsilon))
            .sum()
    }
}

/// Aggregate of one statistic over the samples of one order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub n: usize,
    pub statistic: String,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub target: Option<f64>,
    pub provenance: String,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var, (var / k).sqrt())
}

impl StatRow {
    fn informational(n: usize, statistic: &str, xs: &[f64], provenance: &str) -> Self {
        let (mean, variance, std_error) = moments(xs);
        StatRow {
            n,
            statistic: statistic.into(),
            count: xs.len(),
            mean,
            variance,
            std_error,
            target: None,
            provenance: provenance.into(),
            tolerance: None,
            pass: None,
        }
    }
}

/// Values measured on one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub n: usize,
    pub index: u64,
    pub attempts: u64,
    /// Counts of cycles of each configured length, in configuration order.
    pub cycles: Vec<u64>,
    pub diameter: Option<u32>,
    pub spectral_gap: Option<f64>,
    pub expansion: Option<f64>,
    pub sparsity: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub n: usize,
    pub index: u64,
    pub error: String,
}

/// Failure rates of one condition at consecutive orders, with a one-sided
/// test of "the rate does not increase".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub condition: String,
    pub n_from: usize,
    pub n_to: usize,
    pub rate_from: f64,
    pub rate_to: f64,
    pub z: f64,
    pub critical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub schema_version: u32,
    pub kind: String,
    pub config: ExperimentConfig,
    pub alpha_sum: f64,
    pub rows: Vec<StatRow>,
    pub samples: Vec<SampleRow>,
    pub trend: Vec<TrendRow>,
    pub failures: Vec<SampleFailure>,
    /// Some samples could not be drawn.
    pub partial: bool,
    pub all_pass: bool,
}

impl MCReport {
    pub fn empty(config: ExperimentConfig, kind: &str) -> Self {
        MCReport {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            alpha_sum: config.alpha_sum(),
            config,
            rows: Vec::new(),
            samples: Vec::new(),
            trend: Vec::new(),
            failures: Vec::new(),
            partial: false,
            all_pass: true,
        }
    }

    fn finish(mut self) -> Self {
        self.partial = !self.failures.is_empty();
        self.all_pass = !self.partial
            && self.rows.iter().all(|r| r.pass != Some(false))
            && self.trend.iter().all(|t| t.pass);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    /// Aggregate rows as CSV.
    pub fn rows_csv(&self) -> String {
        let mut t = Table::new([
            "n",
            "statistic",
            "count",
            "mean",
            "variance",
            "std_error",
            "target",
            "tolerance",
            "pass",
            "provenance",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                r.statistic.clone(),
                r.count.to_string(),
                fmt_g12(r.mean),
                fmt_g12(r.variance),
                fmt_g12(r.std_error),
                cell(r.target),
                cell(r.tolerance),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
                r.provenance.clone(),
            ]);
        }
        t.to_csv()
    }

    /// Per-sample values as CSV, one column per configured cycle length.
    pub fn samples_csv(&self) -> String {
        let mut header: Vec<String> = vec!["n".into(), "index".into(), "attempts".into()];
        header.extend(
            self.config
                .cycle_lengths
                .iter()
                .map(|r| format!("cycles_{r}")),
        );
        header.extend(["diameter", "spectral_gap", "expansion", "sparsity"].map(String::from));
        let mut t = Table::new(header);
        for s in &self.samples {
            let mut row = vec![s.n.to_string(), s.index.to_string(), s.attempts.to_string()];
            row.extend(s.cycles.iter().map(|c| c.to_string()));
            row.push(s.diameter.map(|d| d.to_string()).unwrap_or_default());
            row.push(cell(s.spectral_gap));
            row.push(cell(s.expansion));
            row.push(
                s.sparsity
                    .map(Verdict::as_str)
                    .unwrap_or_default()
                    .to_string(),
            );
            t.push(row);
        }
        t.to_csv()
    }
}

fn measure(
    cfg: &ExperimentConfig,
    n: usize,
    index: u64,
    p: &ClassParams,
) -> Result<(SampleRow, Graph)> {
    let s = sample_indexed(&cfg.sampler(n), index)?;
    let g = s.graph;
    let has = |st: Statistic| cfg.statistics.contains(&st);
    let max_len = cfg.cycle_lengths.iter().copied().max().unwrap_or(3);
    let cycles = if has(Statistic::Cycles) {
        let counts = count_cycles_by_length(&g, max_len);
        cfg.cycle_lengths.iter().map(|&r| counts[r]).collect()
    } else {
        Vec::new()
    };
    let diameter = if has(Statistic::Diameter) {
        MetricTable::from_graph(&g).diameter().value()
    } else {
        None
    };
    let spectral_gap = if has(Statistic::SpectralGap) {
        Some(cfg.d as f64 - spectral_gap(&g)?)
    } else {
        None
    };
    let expansion = if has(Statistic::Expansion) && n <= cfg.exact_expansion_limit {
        Some(edge_boundary_ratio_with_limit(&g, cfg.exact_expansion_limit)?.value)
    } else {
        None
    };
    let sparsity = if has(Statistic::Sparsity) {
        Some(check_s_epsilon(&g, p)?.verdict)
    } else {
        None
    };
    Ok((
        SampleRow {
            n,
            index,
            attempts: s.attempts,
            cycles,
            diameter,
            spectral_gap,
            expansion,
            sparsity,
        },
        g,
    ))
}

/// Samples `cfg.samples` graphs per order and aggregates cycle counts
/// (against `(d-1)^r / 2r`), diameters, spectral gaps, exact expansion on
/// small orders and sparsity verdicts.
pub fn run_montecarlo(cfg: &ExperimentConfig) -> Result<MCReport> {
    cfg.validate()?;
    let mut report = MCReport::empty(cfg.clone(), "montecarlo");
    for &n in &cfg.n {
        let p = cfg.params(n)?;
        let results: Vec<Result<(SampleRow, Graph)>> = (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| measure(cfg, n, i, &p))
            .collect();
        let mut rows = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((row, _)) => rows.push(row),
                Err(e) => report.failures.push(SampleFailure {
                    n,
                    index: i as u64,
                    error: e.to_string(),
                }),
            }
        }
        if cfg.statistics.contains(&Statistic::Cycles) {
            for (pos, &len) in cfg.cycle_lengths.iter().enumerate() {
                let xs: Vec<f64> = rows.iter().map(|s| s.cycles[pos] as f64).collect();
                let mut row = StatRow::informational(
                    n,
                    &format!("cycles_{len}"),
                    &xs,
                    "expected count (d-1)^r/(2r)",
                );
                let target = expected_cycle_count(cfg.d, len)?;
                row.target = Some(target);
                row.tolerance = Some(cfg.z * row.std_error);
                row.pass = Some((row.mean - target).abs() <= cfg.z * row.std_error);
                report.rows.push(row);
            }
        }
        if cfg.statistics.contains(&Statistic::Diameter) {
            let xs: Vec<f64> = rows
                .iter()
                .map(|s| s.diameter.map_or(f64::INFINITY, f64::from))
                .collect();
            report
                .rows
                .push(StatRow::informational(n, "diameter", &xs, "measured"));
            let bound = p.diameter_bound();
            let within: Vec<f64> = xs
                .iter()
                .map(|&d| f64::from(u8::from(d <= bound + 1e-9)))
                .collect();
            let mut row = StatRow::informational(
                n,
                "diameter_within_bound",
                &within,
                "fraction with diameter <= M log_d n",
            );
            row.target = Some(cfg.diameter_target);
            row.pass = Some(row.mean >= cfg.diameter_target);
            report.rows.push(row);
        }
        if cfg.statistics.contains(&Statistic::SpectralGap) {
            let xs: Vec<f64> = rows.iter().filter_map(|s| s.spectral_gap).collect();
            report.rows.push(StatRow::informational(
                n,
                "spectral_gap",
                &xs,
                "d - lambda_2",
            ));
        }
        if cfg.statistics.contains(&Statistic::Expansion) && n <= cfg.exact_expansion_limit {
            let xs: Vec<f64> = rows.iter().filter_map(|s| s.expansion).collect();
            report.rows.push(StatRow::informational(
                n,
                "expansion",
                &xs,
                "exact min |dS|/|S| over |S| <= n/2",
            ));
            let ok: Vec<f64> = xs
                .iter()
                .map(|&x| f64::from(u8::from(x >= p.expansion_bound() - 1e-12)))
                .collect();
            report.rows.push(StatRow::informational(
                n,
                "expansion_within_bound",
                &ok,
                "fraction with expansion >= 1/M",
            ));
        }
        if cfg.statistics.contains(&Statistic::Sparsity) {
            let xs: Vec<f64> = rows
                .iter()
                .map(|s| f64::from(u8::from(s.sparsity == Some(Verdict::Pass))))
                .collect();
            report.rows.push(StatRow::informational(
                n,
                "sparsity_pass",
                &xs,
                "fraction passing the sparsity condition",
            ));
        }
        report.samples.extend(rows);
    }
    Ok(report.finish())
}

/// Per-condition verdicts of one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSample {
    pub n: usize,
    pub index: u64,
    pub sparsity: Verdict,
    pub diameter: Verdict,
    pub cycles: Verdict,
    pub expansion: Verdict,
    pub member: Verdict,
    pub short_cycles: usize,
}

impl ClassifiedSample {
    fn from_report(n: usize, index: u64, r: &ClassReport) -> Self {
        ClassifiedSample {
            n,
            index,
            sparsity: r.sparsity.verdict,
            diameter: r.diameter.verdict,
            cycles: r.cycles.verdict,
            expansion: r.expansion.verdict,
            member: r.member,
            short_cycles: r.cycles.count,
        }
    }
}

fn classify_samples(
    cfg: &ExperimentConfig,
    n: usize,
) -> Result<(Vec<ClassifiedSample>, Vec<SampleFailure>)> {
    let p = cfg.params(n)?;
    let results: Vec<Result<ClassifiedSample>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let g = sample_indexed(&cfg.sampler(n), i)?.graph;
            Ok(ClassifiedSample::from_report(
                n,
                i,
                &check_membership(&g, &p)?,
            ))
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => failed.push(SampleFailure {
                n,
                index: i as u64,
                error: e.to_string(),
            }),
        }
    }
    Ok((ok, failed))
}

/// Failure rate (anything but PASS) per condition and order, plus the
/// trend test for the diameter and cycle conditions across the grid.
pub fn classify_batch(cfg: &ExperimentConfig) -> Result<(MCReport, Vec<ClassifiedSample>)> {
    cfg.validate()?;
    let mut report = MCReport::empty(cfg.clone(), "classify");
    let mut all = Vec::new();
    let mut rates: Vec<(usize, [f64; 2], usize)> = Vec::new();
    for &n in &cfg.n {
        let (samples, failed) = classify_samples(cfg, n)?;
        report.failures.extend(failed);
        let conds: [(&str, fn(&ClassifiedSample) -> Verdict, &str); 5] = [
            (
                "fail_sparsity",
                |s| s.sparsity,
                "condition (A): sparse small sets",
            ),
            (
                "fail_diameter",
                |s| s.diameter,
                "condition (B): diameter <= M log_d n",
            ),
            (
                "fail_cycles",
                |s| s.cycles,
                "condition (C): at most n^(1-2eps) short cycles",
            ),
            (
                "fail_expansion",
                |s| s.expansion,
                "condition (D): edge expansion >= 1/M",
            ),
            ("fail_member", |s| s.member, "all conditions"),
        ];
        let mut bc = [0.0; 2];
        for (name, get, prov) in conds {
            let xs: Vec<f64> = samples
                .iter()
                .map(|s| f64::from(u8::from(get(s) != Verdict::Pass)))
                .collect();
            let row = StatRow::informational(n, name, &xs, prov);
            if name == "fail_diameter" {
                bc[0] = row.mean;
            }
            if name == "fail_cycles" {
                bc[1] = row.mean;
            }
            report.rows.push(row);
        }
        rates.push((n, bc, samples.len()));
        all.extend(samples);
    }
    for w in rates.windows(2) {
        let ((n0, r0, k0), (n1, r1, k1)) = (w[0], w[1]);
        for (c, name) in ["diameter", "cycles"].iter().enumerate() {
            let (p0, p1) = (r0[c], r1[c]);
            let pooled = (p0 * k0 as f64 + p1 * k1 as f64) / (k0 + k1) as f64;
            let se = (pooled * (1.0 - pooled) * (1.0 / k0 as f64 + 1.0 / k1 as f64)).sqrt();
            let z = if se > 0.0 { (p1 - p0) / se } else { 0.0 };
            report.trend.push(TrendRow {
                condition: (*name).into(),
                n_from: n0,
                n_to: n1,
                rate_from: p0,
                rate_to: p1,
                z,
                critical: cfg.trend_z,
                pass: z <= cfg.trend_z,
            });
        }
    }
    Ok((report.finish(), all))
}

/// Compact record of one certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub n: usize,
    pub index: u64,
    pub member: Verdict,
    /// `None` when the graph was not certified (not a class member).
    pub valid: Option<bool>,
    pub branch: Option<Branch>,
    pub failures: Vec<String>,
    pub min_eigenvalue: Option<f64>,
    pub subsets: usize,
    pub glued_steps: usize,
    pub grid_steps: usize,
    /// Observed envelopes at `s = 0, 1, ...`.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CertificateSummary {
    pub fn from_certificate(
        n: usize,
        index: u64,
        member: Verdict,
        c: &EmbeddingCertificate,
    ) -> Self {
        let (lower, upper) = c.observed.as_ref().map_or((Vec::new(), Vec::new()), |o| {
            let len = o.upper.points.len();
            (
                (0..len).map(|s| o.lower.eval(s as f64)).collect(),
                (0..len).map(|s| o.upper.eval(s as f64)).collect(),
            )
        });
        CertificateSummary {
            n,
            index,
            member,
            valid: Some(c.valid),
            branch: c.branch,
            failures: c.failures.clone(),
            min_eigenvalue: c.min_eigenvalue,
            subsets: c.subsets.as_ref().map_or(0, |s| s.checks.len()),
            glued_steps: c.grid.iter().filter(|e| e.glued).count(),
            grid_steps: c.grid.len(),
            lower,
            upper,
        }
    }
}

/// Pointwise envelope of the observed distortion over one order's batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub n: usize,
    pub s: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: u32,
    pub kind: String,
    pub config: ExperimentConfig,
    pub certificates: Vec<CertificateSummary>,
    pub failures: Vec<SampleFailure>,
    pub classified: usize,
    pub valid: usize,
    pub valid_fraction: Option<f64>,
    pub envelopes: Vec<EnvelopeRow>,
    pub min_eigenvalue: Option<f64>,
    pub all_pass: bool,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn certificates_csv(&self) -> String {
        let mut t = Table::new([
            "n",
            "index",
            "member",
            "valid",
            "branch",
            "min_eigenvalue",
            "subsets",
            "glued_steps",
            "grid_steps",
            "failures",
        ]);
        for c in &self.certificates {
            t.push(vec![
                c.n.to_string(),
                c.index.to_string(),
                c.member.as_str().into(),
                c.valid.map(|v| v.to_string()).unwrap_or_default(),
                c.branch.map(Branch::as_str).unwrap_or_default().into(),
                cell(c.min_eigenvalue),
                c.subsets.to_string(),
                c.glued_steps.to_string(),
                c.grid_steps.to_string(),
                c.failures.join("; "),
            ]);
        }
        t.to_csv()
    }

    pub fn envelopes_csv(&self) -> String {
        let mut t = Table::new(["n", "s", "lower", "upper"]);
        for e in &self.envelopes {
            t.push(vec![
                e.n.to_string(),
                e.s.to_string(),
                fmt_g12(e.lower),
                fmt_g12(e.upper),
            ]);
        }
        t.to_csv()
    }
}

fn assemble_summary(
    config: ExperimentConfig,
    certificates: Vec<CertificateSummary>,
    failures: Vec<SampleFailure>,
) -> PipelineReport {
    let classified = certificates.iter().filter(|c| c.valid.is_some()).count();
    let valid = certificates
        .iter()
        .filter(|c| c.valid == Some(true))
        .count();
    let mut envelopes = Vec::new();
    let mut orders: Vec<usize> = certificates.iter().map(|c| c.n).collect();
    orders.sort_unstable();
    orders.dedup();
    for n in orders {
        let batch: Vec<&CertificateSummary> = certificates
            .iter()
            .filter(|c| c.n == n && c.valid.is_some())
            .collect();
        let len = batch.iter().map(|c| c.upper.len()).max().unwrap_or(0);
        for s in 0..len {
            let lower = batch
                .iter()
                .filter_map(|c| c.lower.get(s))
                .copied()
                .fold(f64::INFINITY, f64::min);
            let upper = batch
                .iter()
                .filter_map(|c| c.upper.get(s))
                .copied()
                .fold(0.0, f64::max);
            envelopes.push(EnvelopeRow { n, s, lower, upper });
        }
    }
    let min_eigenvalue = certificates
        .iter()
        .filter_map(|c| c.min_eigenvalue)
        .reduce(f64::min);
    PipelineReport {
        schema_version: SCHEMA_VERSION,
        kind: "pipeline".into(),
        config,
        all_pass: failures.is_empty() && valid == classified,
        valid_fraction: (classified > 0).then(|| valid as f64 / classified as f64),
        certificates,
        failures,
        classified,
        valid,
        envelopes,
        min_eigenvalue,
    }
}

fn certificate_seed(seed: u64, n: usize, index: u64) -> u64 {
    rng::derive_seed(rng::derive_seed(seed, n as u64), index)
}

/// Classifies every sample and certifies the members.
pub fn pipeline_run(cfg: &ExperimentConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for &n in &cfg.n {
        let p = cfg.params(n)?;
        let results: Vec<Result<CertificateSummary>> = (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| {
                let g = sample_indexed(&cfg.sampler(n), i)?.graph;
                let member = check_membership(&g, &p)?.member;
                if member != Verdict::Pass {
                    return Ok(CertificateSummary {
                        n,
                        index: i,
                        member,
                        valid: None,
                        branch: None,
                        failures: Vec::new(),
                        min_eigenvalue: None,
                        subsets: 0,
                        glued_steps: 0,
                        grid_steps: 0,
                        lower: Vec::new(),
                        upper: Vec::new(),
                    });
                }
                let opts = AssembleOptions {
                    sample_budget: cfg.sample_budget,
                    seed: certificate_seed(cfg.seed, n, i),
                    tol: cfg.tol,
                    r: None,
                };
                let cert = assemble_asymptotic_kernel(&g, &p, &opts)?;
                Ok(CertificateSummary::from_certificate(n, i, member, &cert))
            })
            .collect();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(c) => certificates.push(c),
                Err(e) => failures.push(SampleFailure {
                    n,
                    index: i as u64,
                    error: e.to_string(),
                }),
            }
        }
    }
    Ok(assemble_summary(cfg.clone(), certificates, failures))
}

/// Certifies explicit graphs (no membership requirement); each graph gets
/// parameters for its own order.
pub fn certify_graphs(cfg: &ExperimentConfig, graphs: &[Graph]) -> Result<PipelineReport> {
    if !(cfg.tol >= 0.0) {
        return Err(Error::InvalidParameter(
            "tolerance must be nonnegative".into(),
        ));
    }
    let results: Vec<Result<CertificateSummary>> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let n = g.n();
            let p = cfg.params(n)?;
            let opts = AssembleOptions {
                sample_budget: cfg.sample_budget,
                seed: certificate_seed(cfg.seed, n, i as u64),
                tol: cfg.tol,
                r: None,
            };
            let cert = assemble_asymptotic_kernel(g, &p, &opts)?;
            Ok(CertificateSummary::from_certificate(
                n,
                i as u64,
                Verdict::Pass,
                &cert,
            ))
        })
        .collect();
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => certificates.push(c),
            Err(e) => failures.push(SampleFailure {
                n: graphs[i].n(),
                index: i as u64,
                error: e.to_string(),
            }),
        }
    }
    Ok(assemble_summary(cfg.clone(), certificates, failures))
}
