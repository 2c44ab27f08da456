//! Negative- and positive-type kernels on finite point sets, definiteness
//! tests, the exponential transform and the conversions between distortion
//! pairs and decay functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::report::fmt_g12;

const ENTRY_TOL: f64 = 1e-12;

/// Symmetric table with zero diagonal and nonnegative entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    labels: Vec<usize>,
    values: Vec<f64>,
}

/// Symmetric table with entries in `[0, 1]` and unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveKernel {
    labels: Vec<usize>,
    values: Vec<f64>,
}

fn check_shape(labels: &[usize], values: &[f64]) -> Result<usize> {
    let m = labels.len();
    if values.len() != m * m {
        return Err(Error::InvalidKernel(format!(
            "{} entries for {m} labels",
            values.len()
        )));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidKernel(format!("non-finite entry {x}")));
    }
    let scale = 1.0 + values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for i in 0..m {
        for j in i + 1..m {
            if (values[i * m + j] - values[j * m + i]).abs() > ENTRY_TOL * scale {
                return Err(Error::InvalidKernel(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(m)
}

fn symmetrize(values: &mut [f64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (values[i * m + j] + values[j * m + i]);
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
}

impl Kernel {
    pub fn new(labels: Vec<usize>, mut values: Vec<f64>) -> Result<Self> {
        let m = check_shape(&labels, &values)?;
        for i in 0..m {
            if values[i * m + i].abs() > ENTRY_TOL {
                return Err(Error::InvalidKernel(format!(
                    "diagonal entry {i} is {}",
                    values[i * m + i]
                )));
            }
            values[i * m + i] = 0.0;
        }
        if let Some(x) = values.iter().find(|&&x| x < -ENTRY_TOL) {
            return Err(Error::InvalidKernel(format!("negative entry {x}")));
        }
        values.iter_mut().for_each(|x| *x = x.max(0.0));
        symmetrize(&mut values, m);
        Ok(Kernel { labels, values })
    }

    /// Builds `K(i, j) = f(i, j)` from the upper triangle.
    pub fn from_fn(labels: Vec<usize>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let m = labels.len();
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                let v = f(i, j);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        Kernel::new(labels, values)
    }

    pub fn zeros(labels: Vec<usize>) -> Self {
        let m = labels.len();
        Kernel {
            labels,
            values: vec![0.0; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry by position.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m() + j]
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// Restriction to the given positions.
    pub fn restrict(&self, positions: &[usize]) -> Kernel {
        let labels = positions.iter().map(|&i| self.labels[i]).collect();
        let k = positions.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in positions {
            for &j in positions {
                values.push(self.get(i, j));
            }
        }
        Kernel { labels, values }
    }

    pub fn to_csv(&self) -> String {
        table_csv(&self.labels, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (labels, values) = parse_table_csv(text)?;
        Kernel::new(labels, values)
    }
}

impl PositiveKernel {
    pub fn new(labels: Vec<usize>, mut values: Vec<f64>) -> Result<Self> {
        let m = check_shape(&labels, &values)?;
        for i in 0..m {
            if (values[i * m + i] - 1.0).abs() > ENTRY_TOL {
                return Err(Error::InvalidKernel(format!(
                    "diagonal entry {i} is {}",
                    values[i * m + i]
                )));
            }
            values[i * m + i] = 1.0;
        }
        if let Some(x) = values
            .iter()
            .find(|&&x| !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&x))
        {
            return Err(Error::InvalidKernel(format!("entry {x} outside [0, 1]")));
        }
        values.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        symmetrize(&mut values, m);
        Ok(PositiveKernel { labels, values })
    }

    pub fn ones(labels: Vec<usize>) -> Self {
        let m = labels.len();
        PositiveKernel {
            labels,
            values: vec![1.0; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m() + j]
    }

    pub fn restrict(&self, positions: &[usize]) -> PositiveKernel {
        let labels = positions.iter().map(|&i| self.labels[i]).collect();
        let mut values = Vec::with_capacity(positions.len() * positions.len());
        for &i in positions {
            for &j in positions {
                values.push(self.get(i, j));
            }
        }
        PositiveKernel { labels, values }
    }

    pub fn to_csv(&self) -> String {
        table_csv(&self.labels, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (labels, values) = parse_table_csv(text)?;
        PositiveKernel::new(labels, values)
    }
}

fn table_csv(labels: &[usize], values: &[f64]) -> String {
    let m = labels.len();
    let mut out = String::from("label");
    for l in labels {
        out.push_str(&format!(",{l}"));
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&l.to_string());
        for j in 0..m {
            out.push(',');
            out.push_str(&fmt_g12(values[i * m + j]));
        }
        out.push('\n');
    }
    out
}

fn parse_table_csv(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, message: String| Error::Parse {
        line: line + 1,
        message,
    };
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing header".into()))?;
    let labels: Vec<usize> = header
        .split(',')
        .skip(1)
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| parse_err(hl, format!("bad label {c:?}")))
        })
        .collect::<Result<_>>()?;
    let m = labels.len();
    let mut values = Vec::with_capacity(m * m);
    for (row, (ln, line)) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m + 1 {
            return Err(parse_err(
                ln,
                format!("expected {} cells, found {}", m + 1, cells.len()),
            ));
        }
        if cells[0].trim().parse::<usize>().ok() != labels.get(row).copied() {
            return Err(parse_err(
                ln,
                format!("row label {:?} does not match the header", cells[0]),
            ));
        }
        for c in &cells[1..] {
            values.push(
                c.trim()
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad number {c:?}")))?,
            );
        }
    }
    if values.len() != m * m {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {m} rows"),
        });
    }
    Ok((labels, values))
}

/// Outcome of a definiteness test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Definiteness {
    pub holds: bool,
    /// Smallest eigenvalue of the tested matrix (0 for empty matrices).
    pub min_eigenvalue: f64,
    /// Eigenvalues down to `-threshold` are accepted.
    pub threshold: f64,
    /// On failure: coefficients (max-norm 1, first nonzero entry positive)
    /// with the wrong sign of the quadratic form.
    pub witness: Option<Vec<f64>>,
    /// Quadratic form of the kernel at the witness.
    pub form_value: Option<f64>,
}

fn normalize_witness(mut z: Vec<f64>) -> Vec<f64> {
    let scale = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let first = z
        .iter()
        .copied()
        .find(|x| x.abs() > 1e-9 * scale)
        .unwrap_or(1.0);
    let s = first.signum() / scale;
    z.iter_mut().for_each(|x| *x *= s);
    z
}

fn quadratic_form(values: &[f64], z: &[f64]) -> f64 {
    let m = z.len();
    (0..m)
        .map(|i| z[i] * (0..m).map(|j| values[i * m + j] * z[j]).sum::<f64>())
        .sum()
}

/// Conditional negative type via the anchored transform
/// `G(i, j) = K(i, a) + K(j, a) - K(i, j)` with the last point as anchor:
/// `K` is CND iff `G` is positive semidefinite. Eigenvalues down to
/// `-tol (1 + max K)` are accepted.
pub fn is_cnd(k: &Kernel, tol: f64) -> Result<Definiteness> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be nonnegative"
        )));
    }
    let m = k.m();
    let threshold = tol * (1.0 + k.max_entry());
    if m <= 1 {
        return Ok(Definiteness {
            holds: true,
            min_eigenvalue: 0.0,
            threshold,
            witness: None,
            form_value: None,
        });
    }
    let a = m - 1;
    let mut g = vec![0.0; a * a];
    for i in 0..a {
        for j in 0..a {
            g[i * a + j] = k.get(i, a) + k.get(j, a) - k.get(i, j);
        }
    }
    let eig = SymmetricEigen::new(&g, a)?;
    let min = eig.min().unwrap_or(0.0);
    let holds = min >= -threshold;
    let (witness, form_value) = if holds {
        (None, None)
    } else {
        let z = normalize_witness(top_mean_zero_direction(k)?);
        let f = quadratic_form(k.values(), &z);
        (Some(z), Some(f))
    };
    Ok(Definiteness {
        holds,
        min_eigenvalue: min,
        threshold,
        witness,
        form_value,
    })
}

/// Unit maximiser of the quadratic form on mean-zero vectors: the top
/// eigenvector of `P K P` with `P` the centring projection.
fn top_mean_zero_direction(k: &Kernel) -> Result<Vec<f64>> {
    let m = k.m();
    let mf = m as f64;
    let row: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| k.get(i, j)).sum::<f64>() / mf)
        .collect();
    let total = row.iter().sum::<f64>() / mf;
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            c[i * m + j] = k.get(i, j) - row[i] - row[j] + total;
        }
    }
    Ok(SymmetricEigen::new(&c, m)?.eigenvector(m - 1))
}

/// Positive type: smallest eigenvalue of the table at least `-tol m`.
pub fn is_pt(k: &PositiveKernel, tol: f64) -> Result<Definiteness> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be nonnegative"
        )));
    }
    let m = k.m();
    let threshold = tol * m as f64;
    if m == 0 {
        return Ok(Definiteness {
            holds: true,
            min_eigenvalue: 0.0,
            threshold,
            witness: None,
            form_value: None,
        });
    }
    let eig = SymmetricEigen::new(k.values(), m)?;
    let min = eig.min().unwrap_or(0.0);
    let holds = min >= -threshold;
    let (witness, form_value) = if holds {
        (None, None)
    } else {
        let z = normalize_witness(eig.eigenvector(0));
        let f = quadratic_form(k.values(), &z);
        (Some(z), Some(f))
    };
    Ok(Definiteness {
        holds,
        min_eigenvalue: min,
        threshold,
        witness,
        form_value,
    })
}

/// Entrywise `exp(-t K)`.
pub fn schoenberg_transform(k: &Kernel, t: f64) -> Result<PositiveKernel> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "transform parameter t = {t} must be positive"
        )));
    }
    let values = k.values().iter().map(|&x| (-t * x).exp()).collect();
    Ok(PositiveKernel {
        labels: k.labels().to_vec(),
        values,
    })
}

/// Nondecreasing piecewise-linear function: linear interpolation between
/// sample points (a repeated abscissa encodes a jump), constant before the
/// first point and affine with slope `slope` after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monotone {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
}

impl Monotone {
    pub fn new(points: Vec<(f64, f64)>, slope: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "monotone function needs a sample point".into(),
            ));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "terminal slope {slope} must be positive"
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample point".into()));
        }
        if points
            .windows(2)
            .any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1)
        {
            return Err(Error::InvalidParameter(
                "sample points must be nondecreasing".into(),
            ));
        }
        Ok(Monotone { points, slope })
    }

    /// `a + b s` for `s >= 0`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Monotone::new(vec![(0.0, a)], b)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = &self.points;
        let i = p.partition_point(|&(x, _)| x <= s);
        if i == 0 {
            return p[0].1;
        }
        let (x0, y0) = p[i - 1];
        if i == p.len() {
            return y0 + self.slope * (s - x0);
        }
        let (x1, y1) = p[i];
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }
}

/// Lower and upper distortion functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionPair {
    pub lower: Monotone,
    pub upper: Monotone,
}

impl DistortionPair {
    /// Checks `lower <= upper` at every sample abscissa of either function.
    pub fn new(lower: Monotone, upper: Monotone) -> Result<Self> {
        let xs = lower.points.iter().chain(&upper.points).map(|p| p.0);
        for x in xs {
            if lower.eval(x) > upper.eval(x) + ENTRY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "lower distortion exceeds upper at {x}"
                )));
            }
        }
        Ok(DistortionPair { lower, upper })
    }

    pub fn identity() -> Self {
        let f = Monotone::affine(0.0, 1.0).expect("valid");
        DistortionPair {
            lower: f.clone(),
            upper: f,
        }
    }

    /// Pairs `(d, K)` with `K` outside `[lower(d), upper(d)]`.
    pub fn violations(&self, k: &Kernel, dist: &[f64]) -> Vec<(usize, usize)> {
        let m = k.m();
        let mut bad = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let (d, v) = (dist[i * m + j], k.get(i, j));
                let slack = ENTRY_TOL * (1.0 + v);
                if v < self.lower.eval(d) - slack || v > self.upper.eval(d) + slack {
                    bad.push((i, j));
                }
            }
        }
        bad
    }
}

/// Bounded non-increasing function tending to zero: linear interpolation
/// between samples, constant before the first and zero after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    pub points: Vec<(f64, f64)>,
}

impl DecayFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "decay function needs a sample point".into(),
            ));
        }
        if points
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite() || y < 0.0)
        {
            return Err(Error::InvalidParameter(
                "decay samples must be finite and nonnegative".into(),
            ));
        }
        if points
            .windows(2)
            .any(|w| w[1].0 <= w[0].0 || w[1].1 > w[0].1)
        {
            return Err(Error::InvalidParameter(
                "decay samples must be strictly increasing in s and non-increasing".into(),
            ));
        }
        Ok(DecayFunction { points })
    }

    /// Equal to `value` on `[0, until]`, zero afterwards.
    pub fn constant(value: f64, until: f64) -> Result<Self> {
        if until > 0.0 {
            DecayFunction::new(vec![(0.0, value), (until, value)])
        } else {
            DecayFunction::new(vec![(0.0, value)])
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = &self.points;
        let i = p.partition_point(|&(x, _)| x <= s);
        if i == 0 {
            return p[0].1;
        }
        if i == p.len() {
            return if s == p[i - 1].0 { p[i - 1].1 } else { 0.0 };
        }
        let ((x0, y0), (x1, y1)) = (p[i - 1], p[i]);
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }

    /// Pointwise maximum, sampled at the union of abscissae.
    pub fn max(&self, other: &DecayFunction) -> DecayFunction {
        let mut xs: Vec<f64> = self
            .points
            .iter()
            .chain(&other.points)
            .map(|p| p.0)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let points = xs
            .into_iter()
            .map(|x| (x, self.eval(x).max(other.eval(x))))
            .collect();
        DecayFunction { points }
    }

    /// Smallest `s` with `gamma(s') <= level` for every `s' >= s`.
    pub fn crossing(&self, level: f64) -> f64 {
        let p = &self.points;
        if p[0].1 <= level {
            return 0.0;
        }
        for w in p.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if y1 <= level {
                return x0 + (y0 - level) / (y0 - y1) * (x1 - x0);
            }
        }
        // zero just after the last sample
        p[p.len() - 1].0.next_up()
    }
}

/// Decay functions indexed by `(r, delta)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayFamily {
    pub entries: Vec<DecayEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub r: f64,
    pub delta: f64,
    pub gamma: DecayFunction,
}

impl DecayFamily {
    pub fn get(&self, r: f64, delta: f64) -> Option<&DecayFunction> {
        self.entries
            .iter()
            .find(|e| e.r == r && e.delta == delta)
            .map(|e| &e.gamma)
    }
}

/// A kernel of the form `exp(-t K)` and its decay bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub kernel: PositiveKernel,
    pub gamma: DecayFunction,
    pub t: f64,
}

/// Exponent with `1 - exp(-t rho_plus(r)) < delta`: half the threshold
/// value `ln(1/(1-delta)) / rho_plus(r)`, or `1 / rho_plus(r)` when
/// `delta = 1`.
pub fn decay_exponent(rho_plus_r: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, 1]"
        )));
    }
    if !(rho_plus_r >= 0.0 && rho_plus_r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho_plus(r) = {rho_plus_r} must be finite and nonnegative"
        )));
    }
    if rho_plus_r == 0.0 {
        return if delta == 1.0 {
            Ok(1.0)
        } else {
            Err(Error::InvalidParameter(
                "rho_plus(r) = 0 leaves t undetermined for delta < 1".into(),
            ))
        };
    }
    if delta == 1.0 {
        return Ok(1.0 / rho_plus_r);
    }
    Ok(0.5 * (1.0 / (1.0 - delta)).ln() / rho_plus_r)
}

/// Turns a kernel with distortion pair `rho` into a positive-type kernel
/// `exp(-t K)` with `1 - k < delta` within distance `r` and
/// `k <= gamma(d)` everywhere, where `gamma(s) = exp(-t rho_minus(s))` is
/// sampled at the distances present in `dist` (row-major, same order as
/// `k`). The sandwich `rho_minus(d) <= K <= rho_plus(d)` is verified first.
pub fn distortion_to_decay(
    rho: &DistortionPair,
    k: &Kernel,
    dist: &[f64],
    r: f64,
    delta: f64,
) -> Result<Decay> {
    let m = k.m();
    if dist.len() != m * m {
        return Err(Error::InvalidParameter(format!(
            "distance table has {} entries, expected {}",
            dist.len(),
            m * m
        )));
    }
    if let Some(&(i, j)) = rho.violations(k, dist).first() {
        return Err(Error::Precondition(format!(
            "K({i}, {j}) = {} outside the distortion bounds at distance {}",
            k.get(i, j),
            dist[i * m + j]
        )));
    }
    let t = decay_exponent(rho.upper.eval(r), delta)?;
    let kernel = schoenberg_transform(k, t)?;
    let mut xs: Vec<f64> = dist
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .chain([0.0])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let points: Vec<(f64, f64)> = xs
        .into_iter()
        .map(|s| (s, (-t * rho.lower.eval(s)).exp()))
        .collect();
    let gamma = DecayFunction::new(points)?;
    Ok(Decay { kernel, gamma, t })
}

/// `K = sum_{n=1}^{n_max} (1 - k_n)` with `rho_plus(r) = r + 1` and
/// `rho_minus(s) = max{N : s >= s_N} / 2`, where `s_N` is the first point
/// after which `gamma_n <= 1/2` for every `n <= N`.
///
/// Each `k_n` must satisfy `1 - k_n < 2^-n` within distance `n` and
/// `k_n <= gamma_n(d)`; both are checked. Dropping the terms past `n_max`
/// changes `K` by less than `2^(1-n_max)` on pairs at distance below
/// `n_max`, and by nothing once `n_max` is at least the diameter in the
/// sense that the bounds above already hold for the truncated sum.
pub fn decay_to_distortion(
    family: &BTreeMap<usize, (PositiveKernel, DecayFunction)>,
    n_max: usize,
    dist: &[f64],
) -> Result<(Kernel, DistortionPair)> {
    let first = family
        .get(&1)
        .ok_or_else(|| Error::InvalidParameter("family has no index 1".into()))?;
    let labels = first.0.labels().to_vec();
    let m = labels.len();
    if dist.len() != m * m {
        return Err(Error::InvalidParameter(format!(
            "distance table has {} entries, expected {}",
            dist.len(),
            m * m
        )));
    }
    let mut values = vec![0.0; m * m];
    let mut s_n = Vec::with_capacity(n_max);
    let mut s_max = 0.0f64;
    for n in 1..=n_max {
        let (k, gamma) = family
            .get(&n)
            .ok_or_else(|| Error::InvalidParameter(format!("family has no index {n}")))?;
        if k.labels() != labels.as_slice() {
            return Err(Error::InvalidParameter(format!(
                "kernel {n} has a different point set"
            )));
        }
        let bound = 0.5f64.powi(n as i32);
        for i in 0..m {
            for j in i + 1..m {
                let (d, v) = (dist[i * m + j], k.get(i, j));
                if d <= n as f64 && 1.0 - v >= bound {
                    return Err(Error::Precondition(format!(
                        "1 - k_{n}({i}, {j}) = {} >= 2^-{n}",
                        1.0 - v
                    )));
                }
                if v > gamma.eval(d) + ENTRY_TOL {
                    return Err(Error::Precondition(format!(
                        "k_{n}({i}, {j}) = {v} exceeds its decay bound"
                    )));
                }
            }
        }
        for (acc, v) in values.iter_mut().zip(k.values()) {
            *acc += 1.0 - v;
        }
        s_max = s_max.max(gamma.crossing(0.5));
        s_n.push(s_max);
    }
    for i in 0..m {
        values[i * m + i] = 0.0;
    }
    let kernel = Kernel::new(labels, values)?;
    let d_max = dist
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let mut points = vec![(0.0, 0.0)];
    for (idx, &s) in s_n.iter().enumerate() {
        let n = (idx + 1) as f64;
        points.push((s, 0.5 * (n - 1.0)));
        points.push((s, 0.5 * n));
    }
    let last = points[points.len() - 1];
    if last.0 < d_max {
        points.push((d_max, last.1));
    }
    let lower = Monotone::new(points, 0.5)?;
    let upper = Monotone::affine(1.0, 1.0)?;
    Ok((kernel, DistortionPair::new(lower, upper)?))
}
