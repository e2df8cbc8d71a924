//! Dense linear algebra for desk-scale regression designs.
//!
//! The estimator pipeline needs a specific, small set of operations on an
//! n×p design matrix X with p < n ≲ 1000:
//!
//! * the Gram matrix XᵀX, assembled by rank-1 row updates (cache-friendly for
//!   row-major storage);
//! * a Cholesky factorization with a pivot-ratio singularity guard, plus the
//!   explicit SPD inverse — the estimator consumes every diagonal entry of
//!   (XᵀX)⁻¹ and its trace, not just solves;
//! * extreme eigenvalues of SPD matrices by (inverse) power iteration with
//!   Rayleigh-quotient stopping;
//! * the Euclidean distance from one column of X to the span of the others,
//!   computed through Householder reflections. This path shares no code with
//!   the Cholesky inverse, which is what makes the identity check
//!   (XᵀX)⁻¹ᵢᵢ = dist(Rᵢ, R₋ᵢ)⁻² a genuine two-sided test.
//!
//! Everything is `f64`, row-major, allocation-explicit, and deterministic.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length must be rows*cols");
        Mat { rows, cols, data }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry (i, j).
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    /// Mutable entry (i, j).
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }

    /// Row i as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column j.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    /// Raw row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// XᵀX, accumulated over rows; only the upper triangle is computed and
    /// then mirrored.
    pub fn transpose_times_self(&self) -> Mat {
        let p = self.cols;
        let mut g = Mat::zeros(p, p);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..p {
                let xi = row[i];
                if xi == 0.0 {
                    continue;
                }
                let gi = &mut g.data[i * p..(i + 1) * p];
                for (j, &xj) in row.iter().enumerate().skip(i) {
                    gi[j] += xi * xj;
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                *g.at_mut(i, j) = g.at(j, i);
            }
        }
        g
    }

    /// Xᵀv for an n-vector v.
    pub fn transpose_times_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(r)) {
                *o += vr * x;
            }
        }
        out
    }

    /// Xv for a p-vector v.
    pub fn times_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(self.row(r), v))
            .collect()
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Cholesky factorization A = LLᵀ of an SPD matrix, with a singularity guard.
///
/// Factorization fails with [`Error::SingularDesign`] when any pivot is not
/// strictly positive or when the smallest pivot falls below 1e-10 times the
/// largest, which for Gram matrices of the supported design families only
/// happens on numerically rank-deficient draws.
pub struct Cholesky {
    l: Mat,
}

/// Pivot-ratio threshold below which a Gram matrix is declared singular.
pub const PIVOT_RATIO_MIN: f64 = 1e-10;

impl Cholesky {
    /// Factors the matrix, or reports it as singular.
    pub fn new(a: &Mat) -> Result<Self> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut l = Mat::zeros(n, n);
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for j in 0..n {
            let mut d = a.at(j, j);
            for k in 0..j {
                let v = l.at(j, k);
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(Error::SingularDesign { pivot_ratio: 0.0 });
            }
            let pivot = sqrt(d);
            min_pivot = min_pivot.min(pivot);
            max_pivot = max_pivot.max(pivot);
            *l.at_mut(j, j) = pivot;
            for i in (j + 1)..n {
                let mut v = a.at(i, j);
                for k in 0..j {
                    v -= l.at(i, k) * l.at(j, k);
                }
                *l.at_mut(i, j) = v / pivot;
            }
        }
        // The ratio is judged against the largest pivot overall, so a small
        // early pivot is caught even when bigger ones come later.
        if min_pivot < PIVOT_RATIO_MIN * max_pivot {
            return Err(Error::SingularDesign { pivot_ratio: min_pivot / max_pivot });
        }
        Ok(Cholesky { l })
    }

    /// Lower-triangular factor L.
    pub fn factor(&self) -> &Mat {
        &self.l
    }

    /// Solves A x = b via the two triangular systems.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.at(i, k) * y[k];
            }
            y[i] /= self.l.at(i, i);
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l.at(k, i) * y[k];
            }
            y[i] /= self.l.at(i, i);
        }
        y
    }

    /// Explicit inverse A⁻¹ = L⁻ᵀ L⁻¹.
    pub fn inverse(&self) -> Mat {
        let n = self.l.rows();
        // Forward-substitute L W = I, giving W = L⁻¹ (lower triangular).
        let mut w = Mat::zeros(n, n);
        for j in 0..n {
            *w.at_mut(j, j) = 1.0 / self.l.at(j, j);
            for i in (j + 1)..n {
                let mut v = 0.0;
                for k in j..i {
                    v -= self.l.at(i, k) * w.at(k, j);
                }
                *w.at_mut(i, j) = v / self.l.at(i, i);
            }
        }
        // A⁻¹ = WᵀW; accumulate the upper triangle and mirror.
        let mut inv = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                // W is lower triangular: W[k][i] = 0 for k < i.
                for k in j..n {
                    v += w.at(k, i) * w.at(k, j);
                }
                *inv.at_mut(i, j) = v;
                *inv.at_mut(j, i) = v;
            }
        }
        inv
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh-quotient stopping.
pub fn max_eigen_spd(a: &Mat) -> f64 {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    // Deterministic start with incommensurate components so the iterate is
    // not orthogonal to the leading eigenvector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.001 * ((i % 7) as f64)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = a.times_vec(&v);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w;
        normalize(&mut v);
        if fabs(next - lambda) <= 1e-13 * fabs(next) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Smallest eigenvalue of an SPD matrix by inverse power iteration through a
/// Cholesky solve, refined with a final Rayleigh quotient on A.
pub fn min_eigen_spd(a: &Mat) -> Result<f64> {
    let chol = Cholesky::new(a)?;
    let n = a.rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.001 * ((i % 7) as f64)).collect();
    normalize(&mut v);
    let mut mu = 0.0; // eigenvalue of A⁻¹
    for _ in 0..500 {
        let w = chol.solve(&v);
        let next = dot(&v, &w);
        v = w;
        normalize(&mut v);
        if fabs(next - mu) <= 1e-13 * fabs(next) {
            break;
        }
        mu = next;
    }
    let av = a.times_vec(&v);
    Ok(dot(&v, &av))
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Distance from column `col` of X to the span of the remaining columns,
/// via Householder QR of the n×(p−1) submatrix.
///
/// The reflectors that triangularize the submatrix are applied to a copy of
/// the target column; the norm of its trailing components (beyond the first
/// p−1) is the projection residual. For p = 1 the span is empty and the
/// distance is the column norm itself.
pub fn distance_to_span_of_others(x: &Mat, col: usize) -> f64 {
    let n = x.rows();
    let p = x.cols();
    assert!(col < p);
    if p == 1 {
        return norm2(&x.col(0));
    }
    // Pack the other columns into a working copy, column-major for easy
    // reflector application.
    let mut w: Vec<Vec<f64>> = (0..p).filter(|&j| j != col).map(|j| x.col(j)).collect();
    let mut target = x.col(col);
    let k = p - 1;
    for j in 0..k {
        // Householder vector for the j-th column below row j.
        let alpha = {
            let c = &w[j];
            let tail_norm = sqrt(dot(&c[j..], &c[j..]));
            if c[j] >= 0.0 {
                -tail_norm
            } else {
                tail_norm
            }
        };
        if alpha == 0.0 {
            continue;
        }
        let mut v = vec![0.0; n];
        v[j..].copy_from_slice(&w[j][j..]);
        v[j] -= alpha;
        let vn2 = dot(&v[j..], &v[j..]);
        if vn2 == 0.0 {
            continue;
        }
        // Apply H = I − 2vvᵀ/‖v‖² to the remaining columns and the target.
        for c in w.iter_mut().skip(j) {
            reflect(c, &v, vn2, j);
        }
        reflect(&mut target, &v, vn2, j);
    }
    sqrt(dot(&target[k..], &target[k..]))
}

fn reflect(c: &mut [f64], v: &[f64], vn2: f64, from: usize) {
    let s = 2.0 * dot(&c[from..], &v[from..]) / vn2;
    for (ci, vi) in c[from..].iter_mut().zip(&v[from..]) {
        *ci -= s * vi;
    }
}
