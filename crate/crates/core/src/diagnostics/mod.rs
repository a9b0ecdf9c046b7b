//! Chain post-processing.

mod freq;

use alloc::string::String;
use alloc::vec::Vec;

pub use freq::{default_frequency_grid, freq_response, FrequencyResponse};

use crate::numerics::Matrix;
use crate::posterior::ParameterSpace;
use crate::samplers::Chain;

/// Reported IACT values are clamped below at this floor.
pub const IACT_FLOOR: f64 = 0.1;

/// Quantile levels reported in a [`Summary`].
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series of length {len} is too short for lag {max_lag}")]
    TooShort { len: usize, max_lag: usize },
    #[error("observed output is identically zero")]
    AllZeroOutput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("no draws")]
    EmptyDraws,
    #[error("coefficient draws have {found} columns, model needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("frequency grid must be strictly increasing within [0, π]")]
    InvalidGrid,
}

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n;
    if !(c0 > 0.0) {
        return Err(DiagnosticsError::ZeroVariance);
    }
    Ok((c, c0))
}

fn autocov(c: &[f64], k: usize) -> f64 {
    c.iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c.len() as f64
}

/// Biased (1/N-normalized) sample autocorrelation for lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if series.len() <= max_lag {
        return Err(DiagnosticsError::TooShort {
            len: series.len(),
            max_lag,
        });
    }
    let (c, c0) = centered(series)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    out.extend((1..=max_lag).map(|k| autocov(&c, k) / c0));
    Ok(out)
}

/// Integrated autocorrelation time `1 + 2Σρ_k`, truncated by Geyer's
/// initial positive sequence: pairs `ρ_{2m} + ρ_{2m+1}` are summed until
/// the first non-positive pair.
///
/// Not floored; antithetic chains can give values below one.
pub fn iact(series: &[f64]) -> Result<f64, DiagnosticsError> {
    if series.len() < 2 {
        return Err(DiagnosticsError::TooShort {
            len: series.len(),
            max_lag: 1,
        });
    }
    let (c, c0) = centered(series)?;
    let n = c.len();
    let mut pairs = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let r0 = if m == 0 { 1.0 } else { autocov(&c, 2 * m) / c0 };
        let r1 = autocov(&c, 2 * m + 1) / c0;
        let gamma = r0 + r1;
        if gamma <= 0.0 {
            break;
        }
        pairs += gamma;
        m += 1;
    }
    Ok(-1.0 + 2.0 * pairs)
}

/// Effective sample size `N / max(IACT, 0.1)`.
pub fn ess(series: &[f64]) -> Result<f64, DiagnosticsError> {
    Ok(series.len() as f64 / iact(series)?.max(IACT_FLOOR))
}

/// `100·(1 − Σ(ŷ − y)² / Σy²)`.
pub fn model_fit(prediction: &[f64], observed: &[f64]) -> Result<f64, DiagnosticsError> {
    if prediction.len() != observed.len() {
        return Err(DiagnosticsError::LengthMismatch(prediction.len(), observed.len()));
    }
    let energy: f64 = observed.iter().map(|y| y * y).sum();
    if energy == 0.0 {
        return Err(DiagnosticsError::AllZeroOutput);
    }
    let err: f64 = prediction.iter().zip(observed).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(100.0 * (1.0 - err / energy))
}

/// Linearly interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

/// Marginal statistics of one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// At [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 5],
    /// `None` for a constant column.
    pub iact: Option<f64>,
    pub ess: Option<f64>,
}

impl CoordinateSummary {
    pub fn from_column(name: String, column: &[f64]) -> Self {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = QUANTILE_LEVELS.map(|q| quantile_sorted(&sorted, q));
        let tau = iact(column).ok().map(|t| t.max(IACT_FLOOR));
        CoordinateSummary {
            name,
            mean,
            sd: libm::sqrt(var),
            quantiles,
            iact: tau,
            ess: tau.map(|t| n / t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub coordinates: Vec<CoordinateSummary>,
    pub draws: usize,
    pub acceptance_rate: f64,
    pub divergences: usize,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&CoordinateSummary> {
        self.coordinates.iter().find(|c| c.name == name)
    }
}

/// Summaries of the selected columns of an already-constrained draw matrix.
pub fn summarize_columns(
    draws: &Matrix,
    names: &[String],
    columns: &[usize],
    acceptance_rate: f64,
    divergences: usize,
) -> Result<Summary, DiagnosticsError> {
    if draws.rows() < 10 {
        return Err(DiagnosticsError::TooFewDraws {
            needed: 10,
            got: draws.rows(),
        });
    }
    let coordinates = columns
        .iter()
        .map(|&j| CoordinateSummary::from_column(names[j].clone(), &draws.column(j)))
        .collect();
    Ok(Summary {
        coordinates,
        draws: draws.rows(),
        acceptance_rate,
        divergences,
    })
}

/// Maps every draw to constrained space and summarizes each coordinate,
/// optionally leaving out hyperparameter columns.
pub fn summarize(chain: &Chain, space: &ParameterSpace, exclude_hyper: bool) -> Result<Summary, DiagnosticsError> {
    let d = space.dim();
    if chain.draws.cols() != d {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: d,
            found: chain.draws.cols(),
        });
    }
    let mut data = Vec::with_capacity(chain.draws.rows() * d);
    for i in 0..chain.draws.rows() {
        data.extend(space.constrain(chain.draws.row(i)));
    }
    let constrained = Matrix::from_row_major(chain.draws.rows(), d, data).expect("row-major layout");
    let hyper = space.hyper_mask();
    let columns: Vec<usize> = (0..d).filter(|&j| !(exclude_hyper && hyper[j])).collect();
    summarize_columns(
        &constrained,
        &space.constrained_names(),
        &columns,
        chain.acceptance_rate,
        chain.divergences,
    )
}
