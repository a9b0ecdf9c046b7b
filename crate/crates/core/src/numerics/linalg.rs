//! Small dense linear algebra, generic over [`Real`] so the Kalman filter can
//! run on dual numbers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use super::dual::Real;
use super::special::LN_2PI;
use super::NumericsError;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::from_f64(1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, NumericsError> {
        if self.cols != x.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumericsError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, NumericsError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(a.clone(), b.clone()))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * k).collect(),
        }
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = (self[(i, j)].clone() + self[(j, i)].clone()) * 0.5;
                out[(i, j)] = avg.clone();
                out[(j, i)] = avg;
            }
        }
        out
    }

    pub fn map_values(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Real::value).collect(),
        }
    }
}

impl Matrix<f64> {
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let data: Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::from_row_major(r, c, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|a| a * a).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the matrix whose columns are eigenvectors.
    pub fn symmetric_eigen(&self) -> Result<(Vec<f64>, Matrix<f64>), NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.symmetrized();
        let mut v = Matrix::<f64>::identity(n);
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off <= 1e-30 * (1.0 + a.frobenius_norm().powi_(2)) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum_() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..n).map(|i| a[(i, i)]).collect();
        Ok((values, v))
    }

    /// Rebuilds `V diag(λ) Vᵀ`.
    pub fn from_eigen(values: &[f64], vectors: &Matrix<f64>) -> Matrix<f64> {
        let n = values.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| vectors[(i, k)] * values[k] * vectors[(j, k)])
                    .sum();
            }
        }
        out
    }
}

trait F64Ext {
    fn powi_(self, n: i32) -> f64;
    fn signum_(self) -> f64;
}

impl F64Ext for f64 {
    fn powi_(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    fn signum_(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.clone() * y.clone();
    }
    acc
}

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::DimensionMismatch {
            expected: m.rows,
            found: m.cols,
        });
    }
    let n = m.rows;
    let scale = m.as_slice().iter().fold(0.0_f64, |acc, a| acc.max(a.value().abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)].value() - m[(j, i)].value()).abs() > 1e-12 * scale.max(1e-300) {
                return Err(NumericsError::NotSymmetric { row: i, col: j });
            }
        }
    }
    let mut l = Matrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].clone();
        for k in 0..j {
            d -= l[(j, k)].clone().square();
        }
        if !(d.value() > 0.0) {
            return Err(NumericsError::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        for i in (j + 1)..n {
            let mut s = m[(i, j)].clone();
            for k in 0..j {
                s -= l[(i, k)].clone() * l[(j, k)].clone();
            }
            l[(i, j)] = s / djj.clone();
        }
        l[(j, j)] = djj;
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut x: Vec<T> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i].clone();
        for (k, xk) in x.iter().enumerate() {
            s -= l[(i, k)].clone() * xk.clone();
        }
        x.push(s / l[(i, i)].clone());
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for k in (i + 1)..n {
            s -= l[(k, i)].clone() * x[k].clone();
        }
        x[i] = s / l[(i, i)].clone();
    }
    x
}

/// Solves `m x = b` given the Cholesky factor of `m`.
pub fn cholesky_solve<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    solve_lower_transpose(l, &solve_lower(l, b))
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn cholesky_inverse(l: &Matrix<f64>) -> Matrix<f64> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Multivariate normal log-density given the lower Cholesky factor of the
/// covariance.
pub fn mvn_logpdf<T: Real>(x: &[T], mean: &[T], chol_cov: &Matrix<T>) -> Result<T, NumericsError> {
    let d = x.len();
    if mean.len() != d || chol_cov.rows() != d || chol_cov.cols() != d {
        return Err(NumericsError::DimensionMismatch {
            expected: d,
            found: if mean.len() != d { mean.len() } else { chol_cov.rows() },
        });
    }
    let diff: Vec<T> = x.iter().zip(mean).map(|(a, b)| a.clone() - b.clone()).collect();
    let w = solve_lower(chol_cov, &diff);
    let mut out = T::from_f64(-0.5 * d as f64 * LN_2PI);
    for i in 0..d {
        out -= chol_cov[(i, i)].clone().ln();
    }
    out -= dot(&w, &w) * 0.5;
    Ok(out)
}
