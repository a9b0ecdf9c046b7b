use alloc::vec::Vec;

use super::ModelError;
use crate::numerics::Matrix;

/// Uniformly sampled input/output record.
///
/// Outputs are stored row-per-sample (`len() × n_outputs()`); the input is
/// scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    u: Vec<f64>,
    y: Matrix,
    dt: f64,
}

impl DataSet {
    pub fn new(u: Vec<f64>, y: Matrix, dt: f64) -> Result<Self, ModelError> {
        if u.is_empty() {
            return Err(ModelError::InvalidData("empty data set"));
        }
        if y.rows() != u.len() {
            return Err(ModelError::DimensionMismatch {
                expected: u.len(),
                found: y.rows(),
            });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ModelError::InvalidData("sampling interval must be positive"));
        }
        if u.iter().chain(y.as_slice()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidData("non-finite sample"));
        }
        Ok(DataSet { u, y, dt })
    }

    /// Single-output data set.
    pub fn scalar(u: Vec<f64>, y: Vec<f64>, dt: f64) -> Result<Self, ModelError> {
        let n = y.len();
        if n == 0 {
            return Err(ModelError::InvalidData("empty data set"));
        }
        let y = Matrix::from_row_major(n, 1, y).map_err(|_| ModelError::InvalidData("empty"))?;
        Self::new(u, y, dt)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.y.cols()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    /// Output sample `t` (all channels).
    pub fn y_at(&self, t: usize) -> &[f64] {
        self.y.row(t)
    }

    /// First output channel.
    pub fn y_scalar(&self) -> Vec<f64> {
        self.y.column(0)
    }

    /// Leading `n` samples.
    pub fn prefix(&self, n: usize) -> Result<DataSet, ModelError> {
        if n == 0 || n > self.len() {
            return Err(ModelError::InsufficientData {
                needed: n.max(1),
                got: self.len(),
            });
        }
        let cols = self.n_outputs();
        let y = Matrix::from_row_major(n, cols, self.y.as_slice()[..n * cols].to_vec())
            .map_err(|_| ModelError::InvalidData("empty"))?;
        Ok(DataSet {
            u: self.u[..n].to_vec(),
            y,
            dt: self.dt,
        })
    }

    /// Samples `start..` as a new data set.
    pub fn suffix(&self, start: usize) -> Result<DataSet, ModelError> {
        if start >= self.len() {
            return Err(ModelError::InsufficientData {
                needed: start + 1,
                got: self.len(),
            });
        }
        let cols = self.n_outputs();
        let y = Matrix::from_row_major(
            self.len() - start,
            cols,
            self.y.as_slice()[start * cols..].to_vec(),
        )
        .map_err(|_| ModelError::InvalidData("empty"))?;
        Ok(DataSet {
            u: self.u[start..].to_vec(),
            y,
            dt: self.dt,
        })
    }

    /// Number of leading samples used for estimation under `fraction`.
    pub fn split_point(&self, fraction: f64) -> usize {
        let n = libm::round(fraction * self.len() as f64) as usize;
        n.clamp(1, self.len())
    }
}
