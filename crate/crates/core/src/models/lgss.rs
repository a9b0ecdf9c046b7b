use alloc::vec::Vec;

use super::{DataSet, ModelError};
use crate::numerics::{cholesky, cholesky_solve, mvn_logpdf, Matrix, Real};

/// One structural matrix entry: fixed, or read from `θ[index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Fixed(f64),
    Free(usize),
}

impl Entry {
    fn resolve<T: Real>(&self, theta: &[T]) -> T {
        match *self {
            Entry::Fixed(v) => T::from_f64(v),
            Entry::Free(i) => theta[i].clone(),
        }
    }
}

/// Linear Gaussian state-space structure
///
/// ```text
/// x_{t+1} = A x_t + B u_t + w_t,   w_t ~ N(0, diag(q_sd)^2)
/// y_t     = C x_t + D u_t + v_t,   v_t ~ N(0, diag(r_sd)^2)
/// ```
///
/// with scalar input and `x_1 ~ N(initial_mean, initial_cov)`. Matrices are
/// row-major lists of [`Entry`]. Entries used as noise standard deviations
/// must be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LgssSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub n_theta: usize,
    pub a: Vec<Entry>,
    pub b: Vec<Entry>,
    pub c: Vec<Entry>,
    pub d: Vec<Entry>,
    pub q_sd: Vec<Entry>,
    pub r_sd: Vec<Entry>,
    pub initial_mean: Vec<f64>,
    pub initial_cov: Matrix,
}

/// Matrices resolved at one `θ`.
#[derive(Debug, Clone)]
pub struct LgssMatrices<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub c: Matrix<T>,
    pub d: Vec<T>,
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

impl LgssSpec {
    /// Defaults: `μ₀ = 0`, `P₀ = 10·I`.
    pub fn with_default_initial(mut self) -> Self {
        self.initial_mean = alloc::vec![0.0; self.n_x];
        self.initial_cov = Matrix::identity(self.n_x).scale(10.0);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n_x = self.n_x;
        let n_y = self.n_y;
        let checks = [
            (self.a.len(), n_x * n_x),
            (self.b.len(), n_x),
            (self.c.len(), n_y * n_x),
            (self.d.len(), n_y),
            (self.q_sd.len(), n_x),
            (self.r_sd.len(), n_y),
            (self.initial_mean.len(), n_x),
            (self.initial_cov.rows(), n_x),
            (self.initial_cov.cols(), n_x),
        ];
        for (found, expected) in checks {
            if found != expected {
                return Err(ModelError::DimensionMismatch { expected, found });
            }
        }
        let all = self
            .a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .chain(&self.d)
            .chain(&self.q_sd)
            .chain(&self.r_sd);
        for e in all {
            if let Entry::Free(i) = e {
                if *i >= self.n_theta {
                    return Err(ModelError::DimensionMismatch {
                        expected: self.n_theta,
                        found: *i + 1,
                    });
                }
            }
        }
        Ok(())
    }

    /// Indices of `θ` used as noise standard deviations.
    pub fn positive_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .q_sd
            .iter()
            .chain(&self.r_sd)
            .filter_map(|e| match e {
                Entry::Free(i) => Some(*i),
                Entry::Fixed(_) => None,
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn matrices<T: Real>(&self, theta: &[T]) -> LgssMatrices<T> {
        let resolve = |entries: &[Entry]| -> Vec<T> { entries.iter().map(|e| e.resolve(theta)).collect() };
        let square = |sd: Vec<T>| -> Matrix<T> {
            let var: Vec<T> = sd.into_iter().map(|s| s.square()).collect();
            Matrix::from_diagonal(&var)
        };
        LgssMatrices {
            a: Matrix::from_row_major(self.n_x, self.n_x, resolve(&self.a)).expect("validated"),
            b: resolve(&self.b),
            c: Matrix::from_row_major(self.n_y, self.n_x, resolve(&self.c)).expect("validated"),
            d: resolve(&self.d),
            q: square(resolve(&self.q_sd)),
            r: square(resolve(&self.r_sd)),
        }
    }
}

/// Prediction-error decomposition of the log-likelihood via the Kalman
/// filter. Returns `-inf` when an innovation covariance is not positive
/// definite.
pub fn kalman_loglik<T: Real>(spec: &LgssSpec, theta: &[T], data: &DataSet) -> Result<T, ModelError> {
    spec.validate()?;
    if theta.len() != spec.n_theta {
        return Err(ModelError::DimensionMismatch {
            expected: spec.n_theta,
            found: theta.len(),
        });
    }
    if data.n_outputs() != spec.n_y {
        return Err(ModelError::DimensionMismatch {
            expected: spec.n_y,
            found: data.n_outputs(),
        });
    }
    let m = spec.matrices(theta);
    let n_x = spec.n_x;
    let c_t = m.c.transpose();
    let a_t = m.a.transpose();
    let mut x: Vec<T> = spec.initial_mean.iter().map(|&v| T::from_f64(v)).collect();
    let mut p: Matrix<T> = Matrix::from_row_major(
        n_x,
        n_x,
        spec.initial_cov.as_slice().iter().map(|&v| T::from_f64(v)).collect(),
    )
    .expect("validated");
    let mut ll = T::zero();
    let mismatch = |_| ModelError::DimensionMismatch { expected: n_x, found: 0 };

    for t in 0..data.len() {
        let u = data.u()[t];
        let y: Vec<T> = data.y_at(t).iter().map(|&v| T::from_f64(v)).collect();
        let cx = m.c.mul_vec(&x).map_err(mismatch)?;
        let y_hat: Vec<T> = cx
            .into_iter()
            .zip(&m.d)
            .map(|(a, d)| a + d.clone() * u)
            .collect();
        let pc_t = p.matmul(&c_t).map_err(mismatch)?;
        let s = m.c.matmul(&pc_t).map_err(mismatch)?.add(&m.r).map_err(mismatch)?.symmetrized();
        let l = match cholesky(&s) {
            Ok(l) => l,
            Err(_) => return Ok(T::from_f64(f64::NEG_INFINITY)),
        };
        ll += mvn_logpdf(&y, &y_hat, &l).map_err(mismatch)?;

        // K = P Cᵀ S⁻¹, computed row by row as S⁻¹ (C P) since S and P are symmetric.
        let innovation: Vec<T> = y.iter().zip(&y_hat).map(|(a, b)| a.clone() - b.clone()).collect();
        let s_inv_innov = cholesky_solve(&l, &innovation);
        let mut x_upd = x.clone();
        for i in 0..n_x {
            for (j, v) in s_inv_innov.iter().enumerate() {
                x_upd[i] += pc_t[(i, j)].clone() * v.clone();
            }
        }
        // P ← P − P Cᵀ S⁻¹ C P
        let mut p_upd = p.clone();
        let cp = pc_t.transpose();
        let s_inv_cp: Vec<Vec<T>> = (0..n_x).map(|j| cholesky_solve(&l, &cp.column(j))).collect();
        for i in 0..n_x {
            for j in 0..n_x {
                let mut acc = T::zero();
                for k in 0..spec.n_y {
                    acc += pc_t[(i, k)].clone() * s_inv_cp[j][k].clone();
                }
                p_upd[(i, j)] -= acc;
            }
        }

        let ax = m.a.mul_vec(&x_upd).map_err(mismatch)?;
        x = ax.into_iter().zip(&m.b).map(|(a, b)| a + b.clone() * u).collect();
        p = m
            .a
            .matmul(&p_upd)
            .map_err(mismatch)?
            .matmul(&a_t)
            .map_err(mismatch)?
            .add(&m.q)
            .map_err(mismatch)?
            .symmetrized();
    }
    Ok(ll)
}
