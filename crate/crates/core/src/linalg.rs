//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form, implicit QL for the spectrum and
//! inverse iteration (with back-transformation through the stored reflectors)
//! for individual eigenvectors. Intended for matrices up to a few thousand
//! rows; everything is `O(n^3)` in the reduction and `O(n^2)` afterwards.

use crate::error::{Error, Result};

/// Largest matrix order accepted by [`SymmetricEigen::new`].
pub const MAX_ORDER: usize = 4096;

const QL_MAX_ITER: usize = 64;

/// Spectral data of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    n: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    // (first row touched, unit Householder vector)
    reflectors: Vec<(usize, Vec<f64>)>,
    values: Vec<f64>,
}

impl SymmetricEigen {
    /// Decomposes the row-major `n x n` matrix `a`. Only symmetry up to
    /// rounding is assumed; the lower triangle is what gets read.
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "matrix buffer has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        if n > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "matrix order {n} exceeds the dense solver limit {MAX_ORDER}"
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix has non-finite entries".into(),
            ));
        }
        let (diag, off, reflectors) = tridiagonalize(a, n);
        let mut values = diag.clone();
        tql_eigenvalues(&mut values, &off)?;
        values.sort_by(f64::total_cmp);
        Ok(SymmetricEigen {
            n,
            diag,
            off,
            reflectors,
            values,
        })
    }

    /// Eigenvalues in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Unit eigenvector for the `idx`-th smallest eigenvalue.
    pub fn eigenvector(&self, idx: usize) -> Vec<f64> {
        let lambda = self.values[idx];
        let mut x = tridiagonal_inverse_iteration(&self.diag, &self.off, lambda);
        for (start, v) in self.reflectors.iter().rev() {
            let tail = &mut x[*start..];
            let dot: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= 2.0 * dot * vi;
            }
        }
        normalize(&mut x);
        x
    }

    pub fn order(&self) -> usize {
        self.n
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    Ok(SymmetricEigen::new(a, n)?.values)
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

type Reflectors = Vec<(usize, Vec<f64>)>;

fn tridiagonalize(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Reflectors) {
    let mut m = a.to_vec();
    // symmetrise from the lower triangle so the reduction sees an exactly
    // symmetric matrix
    for i in 0..n {
        for j in 0..i {
            m[j * n + i] = m[i * n + j];
        }
    }
    let mut reflectors = Vec::new();
    let mut p = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let len = n - start;
        let mut v: Vec<f64> = (0..len).map(|i| m[(start + i) * n + k]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        for i in 0..len {
            let row = &m[(start + i) * n + start..(start + i) * n + n];
            p[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let kappa: f64 = v.iter().zip(&p[..len]).map(|(a, b)| a * b).sum();
        for i in 0..len {
            w[i] = 2.0 * p[i] - 2.0 * kappa * v[i];
        }
        for i in 0..len {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut m[(start + i) * n + start..(start + i) * n + n];
            for ((r, vj), wj) in row.iter_mut().zip(&v).zip(&w[..len]) {
                *r -= vi * wj + wi * vj;
            }
        }
        m[start * n + k] = alpha;
        m[k * n + start] = alpha;
        for i in 1..len {
            m[(start + i) * n + k] = 0.0;
            m[k * n + start + i] = 0.0;
        }
        reflectors.push((start, v));
    }
    let diag = (0..n).map(|i| m[i * n + i]).collect();
    let off = (0..n.saturating_sub(1))
        .map(|i| m[(i + 1) * n + i])
        .collect();
    (diag, off, reflectors)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
/// `d` is overwritten by the (unsorted) eigenvalues.
fn tql_eigenvalues(d: &mut [f64], off: &[f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::Internal("QL iteration failed to converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let signed_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Inverse iteration on `T - mu I` with a slightly perturbed shift.
fn tridiagonal_inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag
        .iter()
        .map(|x| x.abs())
        .chain(off.iter().map(|x| x.abs()))
        .fold(1.0_f64, f64::max);
    let mu = lambda + 1e-10 * scale;
    let shifted: Vec<f64> = diag.iter().map(|x| x - mu).collect();
    // deterministic, non-degenerate starting vector
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919 + 13) % 101) as f64 / 101.0)
        .collect();
    normalize(&mut x);
    for _ in 0..4 {
        solve_tridiagonal(off, &shifted, off, &mut x, scale);
        normalize(&mut x);
    }
    x
}

/// Gaussian elimination with partial pivoting for a tridiagonal system.
/// Zero pivots are replaced by a tiny multiple of `scale`, which is what
/// inverse iteration wants.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scale: f64) {
    let n = diag.len();
    let tiny = f64::EPSILON * scale;
    let mut d = diag.to_vec();
    let mut l = sub.to_vec();
    let mut u1 = vec![0.0; n];
    u1[..n - 1].copy_from_slice(sup);
    let mut u2 = vec![0.0; n];
    for i in 0..n - 1 {
        if l[i].abs() > d[i].abs() {
            std::mem::swap(&mut d[i], &mut l[i]);
            let t = u1[i];
            u1[i] = d[i + 1];
            d[i + 1] = t;
            if i + 1 < n - 1 {
                u2[i] = u1[i + 1];
                u1[i + 1] = 0.0;
            }
            rhs.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            d[i] = tiny;
        }
        let f = l[i] / d[i];
        d[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * u2[i];
        }
        rhs[i + 1] -= f * rhs[i];
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    rhs[n - 1] /= d[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - u1[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - u1[i] * rhs[i + 1] - u2[i] * rhs[i + 2]) / d[i];
    }
}
