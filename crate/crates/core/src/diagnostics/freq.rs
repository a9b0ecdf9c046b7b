use alloc::vec::Vec;

use num_complex::Complex64;

use super::DiagnosticsError;
use crate::numerics::Matrix;
use crate::posterior::TransferModel;

/// Denominators smaller than this in modulus are treated as poles on the grid.
const POLE_TOLERANCE: f64 = 1e-12;

/// Posterior frequency response on a grid of normalized frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    /// Frequencies in rad/sample.
    pub omega: Vec<f64>,
    /// One row per draw; a pole on the grid gives a non-finite entry.
    pub values: Vec<Vec<Complex64>>,
    /// Complex average over the finite draws at each frequency.
    pub mean: Vec<Complex64>,
    /// Number of draws left out of `mean` at each frequency.
    pub excluded: Vec<usize>,
}

/// 200 logarithmically spaced points in `[1e-3, π]`.
pub fn default_frequency_grid() -> Vec<f64> {
    let n = 200;
    let (lo, hi) = (libm::log10(1e-3), libm::log10(core::f64::consts::PI));
    let mut grid: Vec<f64> = (0..n)
        .map(|i| libm::pow(10.0, lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect();
    grid[n - 1] = core::f64::consts::PI;
    grid
}

/// `Σ c_k e^{−jω(k + offset)}`.
fn poly(coeffs: &[f64], offset: usize, omega: f64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| Complex64::from_polar(*c, -omega * (k + offset) as f64))
        .sum()
}

fn evaluate(model: &TransferModel, coeffs: &[f64], omega: f64) -> Complex64 {
    let (num, den) = match model {
        TransferModel::Arx(s) => {
            let (a, b) = coeffs.split_at(s.n_a);
            (poly(b, 0, omega), Complex64::new(1.0, 0.0) + poly(a, 1, omega))
        }
        TransferModel::Oe(s) => {
            let (b, f) = coeffs.split_at(s.n_b + 1);
            (poly(b, 0, omega), Complex64::new(1.0, 0.0) + poly(f, 1, omega))
        }
    };
    if den.norm() < POLE_TOLERANCE {
        Complex64::new(f64::NAN, f64::NAN)
    } else {
        num / den
    }
}

fn n_coeffs(model: &TransferModel) -> usize {
    match model {
        TransferModel::Arx(s) => s.n_coeffs(),
        TransferModel::Oe(s) => s.n_coeffs(),
    }
}

/// `G(e^{jω}) = B/A` (ARX) or `B/F` (OE) for every row of `coeff_draws`.
pub fn freq_response(
    model: &TransferModel,
    coeff_draws: &Matrix,
    omega: &[f64],
) -> Result<FrequencyResponse, DiagnosticsError> {
    if coeff_draws.rows() == 0 {
        return Err(DiagnosticsError::EmptyDraws);
    }
    if coeff_draws.cols() != n_coeffs(model) {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: n_coeffs(model),
            found: coeff_draws.cols(),
        });
    }
    let pi = core::f64::consts::PI;
    let ordered = omega.windows(2).all(|w| w[0] < w[1]);
    if omega.is_empty() || !ordered || omega[0] < 0.0 || omega[omega.len() - 1] > pi {
        return Err(DiagnosticsError::InvalidGrid);
    }
    let values: Vec<Vec<Complex64>> = (0..coeff_draws.rows())
        .map(|i| omega.iter().map(|w| evaluate(model, coeff_draws.row(i), *w)).collect())
        .collect();
    let mut mean = Vec::with_capacity(omega.len());
    let mut excluded = Vec::with_capacity(omega.len());
    for k in 0..omega.len() {
        let (mut sum, mut n) = (Complex64::new(0.0, 0.0), 0usize);
        for row in &values {
            if row[k].is_finite() {
                sum += row[k];
                n += 1;
            }
        }
        excluded.push(values.len() - n);
        mean.push(if n > 0 { sum / n as f64 } else { Complex64::new(f64::NAN, f64::NAN) });
    }
    Ok(FrequencyResponse {
        omega: omega.to_vec(),
        values,
        mean,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArxSpec, OeSpec};
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn grid_shape() {
        let g = default_frequency_grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert_eq!(g[199], PI);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pure_gain() {
        let m = TransferModel::Oe(OeSpec { n_b: 0, n_f: 0 });
        let draws = Matrix::from_row_major(1, 1, vec![2.5]).unwrap();
        let r = freq_response(&m, &draws, &default_frequency_grid()).unwrap();
        for v in &r.values[0] {
            assert!((v - Complex64::new(2.5, 0.0)).norm() < 1e-14);
        }
        assert_eq!(r.mean, r.values[0]);
    }

    #[test]
    fn arx_truth_at_nyquist() {
        let m = TransferModel::Arx(ArxSpec { n_a: 2, n_b: 2 });
        let draws = Matrix::from_row_major(1, 5, vec![-1.5, 0.7, 0.0, 1.0, 0.5]).unwrap();
        let r = freq_response(&m, &draws, &[0.0, PI]).unwrap();
        assert!((r.values[0][1] - Complex64::new(-0.15625, 0.0)).norm() < 1e-12);
        // DC gain B(1)/A(1) = 1.5 / 0.2, real.
        assert!((r.values[0][0] - Complex64::new(7.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn first_order_by_hand() {
        // G = b0 / (1 + f1 e^{-jω}) at ω = π/2: 1 / (1 − 0.5j)
        let m = TransferModel::Oe(OeSpec { n_b: 0, n_f: 1 });
        let draws = Matrix::from_row_major(1, 2, vec![1.0, 0.5]).unwrap();
        let r = freq_response(&m, &draws, &[PI / 2.0]).unwrap();
        let expect = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -0.5);
        assert!((r.values[0][0] - expect).norm() < 1e-14);
    }

    #[test]
    fn pole_on_grid_is_excluded() {
        // 1 + f1 e^{-jπ} = 0 at f1 = 1.
        let m = TransferModel::Oe(OeSpec { n_b: 0, n_f: 1 });
        let draws = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 2.0, 0.0]).unwrap();
        let r = freq_response(&m, &draws, &[PI]).unwrap();
        assert!(!r.values[0][0].is_finite());
        assert_eq!(r.excluded, [1]);
        assert!((r.mean[0] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn input_errors() {
        let m = TransferModel::Oe(OeSpec { n_b: 0, n_f: 1 });
        let ok = Matrix::from_row_major(1, 2, vec![1.0, 0.1]).unwrap();
        assert_eq!(freq_response(&m, &ok, &[1.0, 0.5]), Err(DiagnosticsError::InvalidGrid));
        assert_eq!(freq_response(&m, &ok, &[4.0]), Err(DiagnosticsError::InvalidGrid));
        let bad = Matrix::from_row_major(1, 1, vec![1.0]).unwrap();
        assert!(matches!(
            freq_response(&m, &bad, &[1.0]),
            Err(DiagnosticsError::DimensionMismatch { .. })
        ));
        assert_eq!(
            freq_response(&m, &Matrix::zeros(0, 2), &[1.0]),
            Err(DiagnosticsError::EmptyDraws)
        );
    }
}
