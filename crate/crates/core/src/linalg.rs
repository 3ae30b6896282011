//! Small dense linear algebra: a row-major matrix and a minimum-norm least
//! squares solver built on a one-sided Jacobi SVD.
//!
//! The systems solved here are tiny (a few dozen rows, fewer than twenty
//! columns), so the Jacobi sweep is both accurate and fast enough.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let ss: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        libm::sqrt(ss)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const MAX_SWEEPS: usize = 60;

/// Thin SVD `A = U diag(s) Vᵀ` stored as unnormalized left vectors
/// (`A V` column-wise, so column k has norm `s[k]`) and `V`.
struct JacobiSvd {
    /// m×n, column k equals `s[k] * u_k`.
    av: Matrix,
    v: Matrix,
    sigma: Vec<f64>,
}

fn jacobi_svd(a: &Matrix) -> JacobiSvd {
    let (m, n) = (a.rows, a.cols);
    let mut av = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (av[(i, p)], av[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t =
                    libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (av[(i, p)], av[(i, q)]);
                    av[(i, p)] = c * x - s * y;
                    av[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n)
        .map(|k| libm::sqrt((0..m).map(|i| av[(i, k)] * av[(i, k)]).sum()))
        .collect();
    JacobiSvd { av, v, sigma }
}

/// Minimum-norm least-squares solution `X` (n×p) of `A X ≈ B` with `A` m×n
/// and `B` m×p. Singular values below `max(m, n) · ε · σ_max` are treated
/// as zero, which yields the pseudo-inverse solution for rank-deficient or
/// underdetermined systems.
pub fn lstsq_min_norm(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::Dimension {
            expected: a.rows,
            got: b.rows,
        });
    }
    let (m, n, p) = (a.rows, a.cols, b.cols);
    let svd = jacobi_svd(a);
    let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.max(n) as f64) * f64::EPSILON;
    let mut x = Matrix::zeros(n, p);
    for k in 0..n {
        let s = svd.sigma[k];
        if s <= tol || s == 0.0 {
            continue;
        }
        // (A v_k)ᵀ b / s² = u_kᵀ b / s
        let inv = 1.0 / (s * s);
        for col in 0..p {
            let dot: f64 = (0..m).map(|i| svd.av[(i, k)] * b[(i, col)]).sum();
            let coef = dot * inv;
            for r in 0..n {
                x[(r, col)] += svd.v[(r, k)] * coef;
            }
        }
    }
    Ok(x)
}

/// Numerical rank of `a` under the same threshold as [`lstsq_min_norm`].
pub fn rank(a: &Matrix) -> usize {
    let svd = jacobi_svd(a);
    let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
    let tol = smax * (a.rows.max(a.cols) as f64) * f64::EPSILON;
    svd.sigma.iter().filter(|&&s| s > tol && s > 0.0).count()
}
