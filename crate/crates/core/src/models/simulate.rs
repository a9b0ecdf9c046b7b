use alloc::vec::Vec;

use super::nlss::{NlssSpec, StateSpaceDynamics};
use super::{ArxSpec, DataSet, ModelError, NoiseModel, OeSpec, INSTABILITY_THRESHOLD};
use crate::numerics::{Matrix, RngStream};

/// Excitation signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSignal {
    /// `±amplitude` with a fresh random sign every `hold` samples.
    RandomBinary { amplitude: f64, hold: usize },
    /// `+amplitude` for the first half of each period, `-amplitude` after.
    SquareWave { period: usize, amplitude: f64 },
}

impl InputSignal {
    pub fn random_binary() -> Self {
        InputSignal::RandomBinary {
            amplitude: 1.0,
            hold: 1,
        }
    }

    pub fn square_wave(period: usize) -> Self {
        InputSignal::SquareWave {
            period,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(self, a: f64) -> Self {
        match self {
            InputSignal::RandomBinary { hold, .. } => InputSignal::RandomBinary { amplitude: a, hold },
            InputSignal::SquareWave { period, .. } => InputSignal::SquareWave { period, amplitude: a },
        }
    }

    /// Sign hold length; ignored for square waves.
    pub fn with_hold(self, hold: usize) -> Self {
        match self {
            InputSignal::RandomBinary { amplitude, .. } => InputSignal::RandomBinary { amplitude, hold },
            other => other,
        }
    }

    pub fn generate(&self, n: usize, rng: &mut RngStream) -> Result<Vec<f64>, ModelError> {
        match *self {
            InputSignal::RandomBinary { amplitude, hold } => {
                if hold == 0 {
                    return Err(ModelError::DomainError("hold length must be positive"));
                }
                let mut out = Vec::with_capacity(n);
                let mut level = 0.0;
                for t in 0..n {
                    if t % hold == 0 {
                        level = amplitude * rng.sign();
                    }
                    out.push(level);
                }
                Ok(out)
            }
            InputSignal::SquareWave { period, amplitude } => {
                if period < 2 {
                    return Err(ModelError::DomainError("square-wave period must be at least 2"));
                }
                let half = period / 2;
                Ok((0..n)
                    .map(|t| if (t % period) < half { amplitude } else { -amplitude })
                    .collect())
            }
        }
    }
}

/// Linear data-generating systems.
#[derive(Debug, Clone, PartialEq)]
pub enum SimModel {
    Arx {
        spec: ArxSpec,
        coeffs: Vec<f64>,
        noise: NoiseModel,
    },
    Oe {
        spec: OeSpec,
        coeffs: Vec<f64>,
        noise: NoiseModel,
    },
}

fn draw_noise(noise: &NoiseModel, rng: &mut RngStream) -> f64 {
    if noise.sigma() == &0.0 {
        return 0.0;
    }
    noise.draw(rng)
}

/// Simulates `n` samples from zero initial conditions. The input is drawn
/// first, then the noise sequence, both from `rng`.
pub fn simulate(
    model: &SimModel,
    input: &InputSignal,
    n: usize,
    dt: f64,
    rng: &mut RngStream,
) -> Result<DataSet, ModelError> {
    let u = input.generate(n, rng)?;
    let y = match model {
        SimModel::Arx { spec, coeffs, noise } => {
            if coeffs.len() != spec.n_coeffs() {
                return Err(ModelError::DimensionMismatch {
                    expected: spec.n_coeffs(),
                    found: coeffs.len(),
                });
            }
            let (a, b) = coeffs.split_at(spec.n_a);
            let mut y: Vec<f64> = Vec::with_capacity(n);
            for t in 0..n {
                let mut v = draw_noise(noise, rng);
                for (k, ak) in a.iter().enumerate().take(t) {
                    v -= ak * y[t - k - 1];
                }
                for (k, bk) in b.iter().enumerate().take(t + 1) {
                    v += bk * u[t - k];
                }
                y.push(v);
            }
            y
        }
        SimModel::Oe { spec, coeffs, noise } => {
            if coeffs.len() != spec.n_coeffs() {
                return Err(ModelError::DimensionMismatch {
                    expected: spec.n_coeffs(),
                    found: coeffs.len(),
                });
            }
            let (b, f) = coeffs.split_at(spec.n_b + 1);
            let mut clean: Vec<f64> = Vec::with_capacity(n);
            for t in 0..n {
                let mut v = 0.0;
                for (k, bk) in b.iter().enumerate().take(t + 1) {
                    v += bk * u[t - k];
                }
                for (k, fk) in f.iter().enumerate().take(t) {
                    v -= fk * clean[t - k - 1];
                }
                clean.push(v);
            }
            clean.into_iter().map(|v| v + draw_noise(noise, rng)).collect()
        }
    };
    if let Some(t) = y.iter().position(|v| !(v.abs() <= INSTABILITY_THRESHOLD)) {
        return Err(ModelError::UnstableSimulation(t));
    }
    DataSet::scalar(u, y, dt)
}

/// Simulates a state-space model from `x0` with noise sds
/// `spec.process_sd` and `spec.measurement_sd`. Returns the data and the
/// true state trajectory (`n × n_x`).
pub fn simulate_nlss<D: StateSpaceDynamics>(
    spec: &NlssSpec<D>,
    theta: &[f64],
    x0: &[f64],
    input: &InputSignal,
    n: usize,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(DataSet, Matrix), ModelError> {
    spec.validate()?;
    let n_x = spec.dynamics.state_dim();
    let n_y = spec.dynamics.output_dim();
    if x0.len() != n_x {
        return Err(ModelError::DimensionMismatch {
            expected: n_x,
            found: x0.len(),
        });
    }
    if n == 0 {
        return Err(ModelError::InvalidData("empty data set"));
    }
    let u = input.generate(n, rng)?;
    let mut states: Vec<f64> = Vec::with_capacity(n * n_x);
    let mut outputs: Vec<f64> = Vec::with_capacity(n * n_y);
    let mut x = x0.to_vec();
    for t in 0..n {
        if t > 0 {
            x = spec.transition(&x, u[t - 1], theta, dt)?;
            for (xi, q) in x.iter_mut().zip(&spec.process_sd) {
                *xi += q * rng.standard_normal();
            }
        }
        if let Some(_) = x.iter().find(|v| !(v.abs() <= INSTABILITY_THRESHOLD)) {
            return Err(ModelError::UnstableSimulation(t));
        }
        let y = spec.dynamics.measure(&x, u[t], theta)?;
        for (yi, r) in y.iter().zip(&spec.measurement_sd) {
            outputs.push(yi + r * rng.standard_normal());
        }
        states.extend_from_slice(&x);
    }
    let states = Matrix::from_row_major(n, n_x, states).map_err(|_| ModelError::InvalidData("empty"))?;
    let y = Matrix::from_row_major(n, n_y, outputs).map_err(|_| ModelError::InvalidData("empty"))?;
    Ok((DataSet::new(u, y, dt)?, states))
}
