//! Parameter spaces and assembled log-posterior targets.
//!
//! Every target is a density over unconstrained coordinates `ζ`:
//! `log p(y | η(ζ)) + log p(η(ζ)) + Σ log|dη/dζ|`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::models::{
    arx_loglik, arx_regressor, kalman_loglik, nlss_logjoint, nlss_logjoint_gradient, oe_loglik,
    ArxSpec, DataSet, LgssSpec, ModelError, Noise, NlssSpec, OeSpec, StateSpaceDynamics,
};
use crate::numerics::{dual_eval, Dual, Real};
use crate::priors::{
    gamma_logpdf, gaussian_logprior, halfcauchy_scaled_logpdf, horseshoe_logjoint, laplace_logprior,
    PriorError, PriorSpec, Transform,
};
use crate::samplers::TargetDensity;

const LN_2: f64 = core::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PosteriorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error("prior {prior} cannot be used for block `{block}`")]
    UnsupportedPrior { block: String, prior: &'static str },
}

/// Named group of coordinates sharing a transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    /// Constrained-space names, one per coordinate.
    pub names: Vec<String>,
    pub transform: Transform,
    /// Hyperparameters (horseshoe scales) are excluded from default summaries.
    pub hyper: bool,
}

/// Ordered list of blocks laid out contiguously in `ζ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSpace {
    blocks: Vec<Block>,
}

impl ParameterSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block and returns its coordinate range.
    pub fn push(&mut self, name: &str, names: Vec<String>, transform: Transform, hyper: bool) -> Range<usize> {
        let start = self.dim();
        let end = start + names.len();
        self.blocks.push(Block {
            name: String::from(name),
            names,
            transform,
            hyper,
        });
        start..end
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.names.len()).sum()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_range(&self, name: &str) -> Option<Range<usize>> {
        let mut start = 0;
        for b in &self.blocks {
            let end = start + b.names.len();
            if b.name == name {
                return Some(start..end);
            }
            start = end;
        }
        None
    }

    /// Per-coordinate `(block, transform)` pairs.
    fn coordinates(&self) -> impl Iterator<Item = (&Block, usize)> {
        self.blocks.iter().flat_map(|b| (0..b.names.len()).map(move |i| (b, i)))
    }

    pub fn constrained_names(&self) -> Vec<String> {
        self.coordinates().map(|(b, i)| b.names[i].clone()).collect()
    }

    /// Names of the sampled coordinates, e.g. `log_sigma_e` for a
    /// log-transformed `sigma_e`.
    pub fn unconstrained_names(&self) -> Vec<String> {
        self.coordinates()
            .map(|(b, i)| match b.transform {
                Transform::Identity => b.names[i].clone(),
                Transform::LogPositive => format!("log_{}", b.names[i]),
                Transform::ShiftedLog { lower } => format!("log_{}_minus_{}", b.names[i], lower),
            })
            .collect()
    }

    pub fn transforms(&self) -> Vec<Transform> {
        self.coordinates().map(|(b, _)| b.transform).collect()
    }

    pub fn hyper_mask(&self) -> Vec<bool> {
        self.coordinates().map(|(b, _)| b.hyper).collect()
    }

    /// Maps `ζ` to constrained values.
    pub fn constrain(&self, z: &[f64]) -> Vec<f64> {
        self.coordinates()
            .zip(z)
            .map(|((b, _), &v)| b.transform.forward(v))
            .collect()
    }

    /// Maps constrained values back to `ζ`.
    pub fn unconstrain(&self, eta: &[f64]) -> Vec<f64> {
        self.coordinates()
            .zip(eta)
            .map(|((b, _), &v)| b.transform.inverse(v))
            .collect()
    }
}

fn prior_name(p: &PriorSpec) -> &'static str {
    match p {
        PriorSpec::Gaussian { .. } => "gaussian",
        PriorSpec::Laplace { .. } => "laplace",
        PriorSpec::Horseshoe => "horseshoe",
        PriorSpec::Gamma { .. } => "gamma",
        PriorSpec::HalfCauchy { .. } => "half_cauchy",
        PriorSpec::Flat => "flat",
    }
}

fn check_real_prior(block: &str, p: &PriorSpec) -> Result<(), PosteriorError> {
    p.validate()?;
    match p {
        PriorSpec::Gamma { .. } | PriorSpec::HalfCauchy { .. } => Err(PosteriorError::UnsupportedPrior {
            block: String::from(block),
            prior: prior_name(p),
        }),
        _ => Ok(()),
    }
}

fn check_positive_prior(block: &str, p: &PriorSpec) -> Result<(), PosteriorError> {
    p.validate()?;
    match p {
        PriorSpec::Horseshoe => Err(PosteriorError::UnsupportedPrior {
            block: String::from(block),
            prior: prior_name(p),
        }),
        _ => Ok(()),
    }
}

/// Log prior of real-valued coefficients (no horseshoe).
fn real_logprior<T: Real>(p: &PriorSpec, eta: &[T]) -> T {
    match *p {
        PriorSpec::Gaussian { scale } => gaussian_logprior(eta, &vec![scale; eta.len()]).expect("validated"),
        PriorSpec::Laplace { scale } => laplace_logprior(eta, scale).expect("validated"),
        _ => T::zero(),
    }
}

/// Log prior of a positive scalar. Gaussian and Laplace priors are folded
/// onto the positive half-line.
fn positive_logprior<T: Real>(p: &PriorSpec, x: T) -> T {
    match *p {
        PriorSpec::Gaussian { scale } => gaussian_logprior(&[x], &[scale]).expect("validated") + LN_2,
        PriorSpec::Laplace { scale } => laplace_logprior(&[x], scale).expect("validated") + LN_2,
        PriorSpec::Gamma { shape, rate } => {
            gamma_logpdf(x, shape, rate).unwrap_or_else(|_| T::from_f64(f64::NEG_INFINITY))
        }
        PriorSpec::HalfCauchy { scale } => halfcauchy_scaled_logpdf(x, scale),
        PriorSpec::Horseshoe | PriorSpec::Flat => T::zero(),
    }
}

/// Coefficient block with optional horseshoe hyperparameters.
#[derive(Debug, Clone, PartialEq)]
struct CoefficientBlock {
    range: Range<usize>,
    prior: PriorSpec,
    log_beta: Option<Range<usize>>,
    log_tau: Option<usize>,
}

impl CoefficientBlock {
    fn add(space: &mut ParameterSpace, name: &str, names: Vec<String>, prior: PriorSpec, positive: bool) -> Self {
        let hs_names: Vec<String> = names.iter().map(|n| format!("beta_{n}")).collect();
        let transform = if positive { Transform::LogPositive } else { Transform::Identity };
        let range = space.push(name, names, transform, false);
        let (log_beta, log_tau) = if prior == PriorSpec::Horseshoe {
            let b = space.push("local_scale", hs_names, Transform::LogPositive, true);
            let t = space.push("global_scale", vec![String::from("tau")], Transform::LogPositive, true);
            (Some(b), Some(t.start))
        } else {
            (None, None)
        };
        CoefficientBlock {
            range,
            prior,
            log_beta,
            log_tau,
        }
    }

    /// Prior on the block given its constrained values, plus hyperparameter
    /// terms. Horseshoe Jacobians are included by `horseshoe_logjoint`.
    fn logprior<T: Real>(&self, eta: &[T], z: &[T], positive: bool) -> T {
        match (&self.prior, &self.log_beta, self.log_tau) {
            (PriorSpec::Horseshoe, Some(lb), Some(lt)) => {
                let hs = horseshoe_logjoint(eta, &z[lb.clone()], z[lt].clone()).expect("validated");
                // A half-line horseshoe has twice the density.
                if positive {
                    hs + LN_2 * eta.len() as f64
                } else {
                    hs
                }
            }
            (p, _, _) if positive => {
                let mut acc = T::zero();
                for e in eta {
                    acc += positive_logprior(p, e.clone());
                }
                acc
            }
            (p, _, _) => real_logprior(p, eta),
        }
    }
}

/// Polynomial model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferModel {
    Arx(ArxSpec),
    Oe(OeSpec),
}

impl TransferModel {
    pub fn coeff_names(&self) -> Vec<String> {
        match self {
            TransferModel::Arx(s) => s.coeff_names(),
            TransferModel::Oe(s) => s.coeff_names(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseFamily {
    Gaussian,
    /// Degrees of freedom sampled as `ν = 1 + exp(ζ)` under `nu_prior`.
    StudentT { nu_prior: PriorSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseScale {
    Known(f64),
    /// Sampled as `σ = exp(ζ)` under the given prior.
    Sampled(PriorSpec),
}

/// Prior and noise choices for a transfer-function posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOptions {
    pub coeff_prior: PriorSpec,
    pub family: NoiseFamily,
    pub scale: NoiseScale,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            coeff_prior: PriorSpec::Gaussian {
                scale: PriorSpec::DEFAULT_GAUSSIAN_SCALE,
            },
            family: NoiseFamily::Gaussian,
            scale: NoiseScale::Sampled(PriorSpec::HalfCauchy { scale: 1.0 }),
        }
    }
}

/// Posterior for ARX or OE coefficients, the noise scale and, for
/// Student-t noise, the degrees of freedom.
#[derive(Debug, Clone)]
pub struct TransferPosterior {
    model: TransferModel,
    data: DataSet,
    options: TransferOptions,
    space: ParameterSpace,
    coeffs: CoefficientBlock,
    sigma: Option<usize>,
    nu: Option<usize>,
    /// ARX regressors (row-major) and targets.
    arx_cache: Option<(Vec<f64>, Vec<f64>)>,
}

impl TransferPosterior {
    pub fn new(model: TransferModel, data: DataSet, options: TransferOptions) -> Result<Self, PosteriorError> {
        check_real_prior("coefficients", &options.coeff_prior)?;
        let mut space = ParameterSpace::new();
        let coeffs = CoefficientBlock::add(
            &mut space,
            "coefficients",
            model.coeff_names(),
            options.coeff_prior.clone(),
            false,
        );
        let sigma = match &options.scale {
            NoiseScale::Known(s) => {
                if !(*s > 0.0) {
                    return Err(PriorError::NonPositiveScale(*s).into());
                }
                None
            }
            NoiseScale::Sampled(p) => {
                check_positive_prior("noise.sigma", p)?;
                Some(space.push("noise_scale", vec![String::from("sigma_e")], Transform::LogPositive, false).start)
            }
        };
        let nu = match &options.family {
            NoiseFamily::Gaussian => None,
            NoiseFamily::StudentT { nu_prior } => {
                check_positive_prior("noise.nu", nu_prior)?;
                Some(
                    space
                        .push("dof", vec![String::from("nu")], Transform::ShiftedLog { lower: 1.0 }, false)
                        .start,
                )
            }
        };
        let arx_cache = match model {
            TransferModel::Arx(spec) => {
                let needed = spec.first_index() + 1;
                if data.len() < needed {
                    return Err(ModelError::InsufficientData {
                        needed,
                        got: data.len(),
                    }
                    .into());
                }
                let mut phi = Vec::new();
                let mut y = Vec::new();
                for t in spec.first_index()..data.len() {
                    phi.extend(arx_regressor(&spec, &data, t));
                    y.push(data.y()[(t, 0)]);
                }
                Some((phi, y))
            }
            TransferModel::Oe(_) => None,
        };
        Ok(TransferPosterior {
            model,
            data,
            options,
            space,
            coeffs,
            sigma,
            nu,
            arx_cache,
        })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn model(&self) -> &TransferModel {
        &self.model
    }

    pub fn data(&self) -> &DataSet {
        &self.data
    }

    /// Coefficient slice of `ζ` (identity-transformed).
    pub fn coefficients<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[self.coeffs.range.clone()]
    }

    fn noise<T: Real>(&self, z: &[T]) -> Noise<T> {
        let sigma = match (&self.options.scale, self.sigma) {
            (NoiseScale::Known(s), _) => T::from_f64(*s),
            (_, Some(i)) => z[i].clone().exp(),
            _ => unreachable!("sampled scale has a coordinate"),
        };
        match self.nu {
            None => Noise::Gaussian { sigma },
            Some(i) => Noise::StudentT {
                nu: z[i].clone().exp() + 1.0,
                sigma,
            },
        }
    }

    /// Prior terms and Jacobians over the whole of `ζ`.
    fn log_prior<T: Real>(&self, z: &[T]) -> T {
        let c = &z[self.coeffs.range.clone()];
        let mut acc = self.coeffs.logprior(c, z, false);
        if let (NoiseScale::Sampled(p), Some(i)) = (&self.options.scale, self.sigma) {
            acc += positive_logprior(p, z[i].clone().exp()) + z[i].clone();
        }
        if let (NoiseFamily::StudentT { nu_prior }, Some(i)) = (&self.options.family, self.nu) {
            acc += positive_logprior(nu_prior, z[i].clone().exp() + 1.0) + z[i].clone();
        }
        acc
    }

    fn log_likelihood<T: Real>(&self, z: &[T]) -> T {
        let c = &z[self.coeffs.range.clone()];
        let noise = self.noise(z);
        let ll = match &self.model {
            TransferModel::Arx(spec) => arx_loglik(spec, c, &noise, &self.data),
            TransferModel::Oe(spec) => oe_loglik(spec, c, &noise, &self.data),
        };
        ll.expect("shapes checked at construction")
    }

    fn eval<T: Real>(&self, z: &[T]) -> T {
        let lp = self.log_prior(z);
        if lp.value() == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.log_likelihood(z)
    }

    /// ARX likelihood gradient: residuals in `f64`, noise parameters and the
    /// residual itself as three dual directions per term.
    fn arx_likelihood_gradient(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let (phi, y) = self.arx_cache.as_ref().expect("arx model");
        let range = self.coeffs.range.clone();
        let c = &z[range.clone()];
        let k = c.len();
        let n = y.len();
        let sigma = match (&self.options.scale, self.sigma) {
            (NoiseScale::Known(s), _) => Dual::constant(*s),
            (_, Some(i)) => Dual::variable(z[i], 0, 3).exp(),
            _ => unreachable!(),
        };
        let nu = self.nu.map(|i| Dual::variable(z[i], 1, 3).exp() + 1.0);

        // Per-sample kernel; the normalizer is added once below.
        let mut total = Dual::constant(0.0);
        let (inv_var, nu_scale) = match &nu {
            None => (sigma.clone().square().powf(-1.0) * (-0.5), Dual::constant(0.0)),
            Some(nu) => (Dual::constant(0.0), (sigma.clone().square() * nu.clone()).powf(-1.0)),
        };
        let half_nu1 = nu.as_ref().map(|v| (v.clone() + 1.0) * -0.5);
        for t in 0..n {
            let row = &phi[t * k..(t + 1) * k];
            let e = y[t] - row.iter().zip(c).map(|(p, c)| p * c).sum::<f64>();
            let ed = Dual::variable(e, 2, 3);
            let term = match &half_nu1 {
                None => ed.square() * inv_var.clone(),
                Some(h) => (ed.square() * nu_scale.clone()).ln_1p() * h.clone(),
            };
            let psi = term.d(2);
            for (g, p) in grad[range.clone()].iter_mut().zip(row) {
                *g -= psi * p;
            }
            total.value += term.value;
            total.tangent.resize(3, 0.0);
            total.tangent[0] += term.d(0);
            total.tangent[1] += term.d(1);
        }
        let norm = match &nu {
            None => -(sigma.ln() + 0.5 * crate::numerics::special::LN_2PI),
            Some(nu) => {
                ((nu.clone() + 1.0) * 0.5).ln_gamma()
                    - (nu.clone() * 0.5).ln_gamma()
                    - (nu.clone() * core::f64::consts::PI).ln() * 0.5
                    - sigma.ln()
            }
        };
        let total = total + norm * n as f64;
        if let Some(i) = self.sigma {
            grad[i] += total.d(0);
        }
        if let Some(i) = self.nu {
            grad[i] += total.d(1);
        }
        total.value
    }
}

impl TargetDensity for TransferPosterior {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        self.eval(z)
    }

    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        match self.model {
            TransferModel::Arx(_) => {
                let zd = Dual::seed(z);
                let lp = self.log_prior(&zd);
                if lp.value == f64::NEG_INFINITY {
                    return (f64::NEG_INFINITY, vec![0.0; z.len()]);
                }
                let mut grad: Vec<f64> = (0..z.len()).map(|i| lp.d(i)).collect();
                let ll = self.arx_likelihood_gradient(z, &mut grad);
                (lp.value + ll, grad)
            }
            TransferModel::Oe(_) => gradient_or_zero(|v| self.eval(v), z),
        }
    }
}

fn gradient_or_zero<F: Fn(&[Dual]) -> Dual>(f: F, z: &[f64]) -> (f64, Vec<f64>) {
    match dual_eval(f, z) {
        Ok((v, g)) if v.is_finite() && g.iter().all(|x| x.is_finite()) => (v, g),
        Ok((v, _)) if v == f64::NEG_INFINITY => (v, vec![0.0; z.len()]),
        _ => (f64::NAN, vec![0.0; z.len()]),
    }
}

/// Posterior over the free entries of a linear Gaussian state-space model.
/// Entries used as noise standard deviations are sampled on the log scale.
#[derive(Debug, Clone)]
pub struct LgssPosterior {
    spec: LgssSpec,
    data: DataSet,
    coeff_prior: PriorSpec,
    scale_prior: PriorSpec,
    positive: Vec<bool>,
    space: ParameterSpace,
}

impl LgssPosterior {
    pub fn new(
        spec: LgssSpec,
        data: DataSet,
        coeff_prior: PriorSpec,
        scale_prior: PriorSpec,
    ) -> Result<Self, PosteriorError> {
        spec.validate()?;
        if coeff_prior == PriorSpec::Horseshoe {
            return Err(PosteriorError::UnsupportedPrior {
                block: String::from("theta"),
                prior: "horseshoe",
            });
        }
        check_real_prior("theta", &coeff_prior)?;
        check_positive_prior("noise", &scale_prior)?;
        let mut positive = vec![false; spec.n_theta];
        for i in spec.positive_indices() {
            positive[i] = true;
        }
        let mut space = ParameterSpace::new();
        for (i, &p) in positive.iter().enumerate() {
            let t = if p { Transform::LogPositive } else { Transform::Identity };
            space.push("theta", vec![format!("theta{}", i + 1)], t, false);
        }
        Ok(LgssPosterior {
            spec,
            data,
            coeff_prior,
            scale_prior,
            positive,
            space,
        })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    fn eval<T: Real>(&self, z: &[T]) -> T {
        let mut acc = T::zero();
        let mut theta = Vec::with_capacity(z.len());
        for (zi, &p) in z.iter().zip(&self.positive) {
            if p {
                let s = zi.clone().exp();
                acc += positive_logprior(&self.scale_prior, s.clone()) + zi.clone();
                theta.push(s);
            } else {
                acc += real_logprior(&self.coeff_prior, core::slice::from_ref(zi));
                theta.push(zi.clone());
            }
        }
        acc + kalman_loglik(&self.spec, &theta, &self.data).expect("validated")
    }
}

impl TargetDensity for LgssPosterior {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        self.eval(z)
    }

    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        gradient_or_zero(|v| self.eval(v), z)
    }
}

/// Joint posterior of positive physical parameters and the full state
/// trajectory of a nonlinear state-space model.
#[derive(Debug, Clone)]
pub struct NlssPosterior<D> {
    spec: NlssSpec<D>,
    data: DataSet,
    params: CoefficientBlock,
    states: Range<usize>,
    space: ParameterSpace,
}

impl<D: StateSpaceDynamics + Sync> NlssPosterior<D> {
    pub fn new(spec: NlssSpec<D>, data: DataSet, param_prior: PriorSpec) -> Result<Self, PosteriorError> {
        spec.validate()?;
        if param_prior != PriorSpec::Horseshoe {
            check_positive_prior("parameters", &param_prior)?;
        }
        let n_x = spec.dynamics.state_dim();
        if data.n_outputs() != spec.dynamics.output_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: spec.dynamics.output_dim(),
                found: data.n_outputs(),
            }
            .into());
        }
        let mut space = ParameterSpace::new();
        let params = CoefficientBlock::add(&mut space, "parameters", spec.dynamics.param_names(), param_prior, true);
        let names = (0..data.len())
            .flat_map(|t| (0..n_x).map(move |i| format!("x{}_{}", i + 1, t + 1)))
            .collect();
        let states = space.push("states", names, Transform::Identity, false);
        Ok(NlssPosterior {
            spec,
            data,
            params,
            states,
            space,
        })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn spec(&self) -> &NlssSpec<D> {
        &self.spec
    }

    pub fn data(&self) -> &DataSet {
        &self.data
    }

    pub fn state_range(&self) -> Range<usize> {
        self.states.clone()
    }

    pub fn param_range(&self) -> Range<usize> {
        self.params.range.clone()
    }

    /// Prior on parameters (and horseshoe scales) with Jacobians, over the
    /// non-state coordinates only.
    fn log_prior<T: Real>(&self, z: &[T]) -> T {
        let zp = &z[self.params.range.clone()];
        let eta: Vec<T> = zp.iter().map(|v| v.clone().exp()).collect();
        let mut acc = self.params.logprior(&eta, z, true);
        for v in zp {
            acc += v.clone();
        }
        acc
    }
}

impl<D: StateSpaceDynamics + Sync> TargetDensity for NlssPosterior<D> {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        let theta: Vec<f64> = z[self.params.range.clone()].iter().map(|v| libm::exp(*v)).collect();
        let lp = self.log_prior(z);
        let ll = nlss_logjoint(&self.spec, &theta, &z[self.states.clone()], &self.data).expect("validated");
        lp + ll
    }

    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let n_hyper = self.states.start;
        let head = Dual::seed(&z[..n_hyper]);
        let lp = self.log_prior(&head);
        // The likelihood only sees the parameters, so its tangents span
        // those coordinates alone.
        let params = self.params.range.clone();
        let theta: Vec<Dual> = Dual::seed(&z[params.clone()]).into_iter().map(|v| v.exp()).collect();
        let (ll, g_theta, g_x) =
            nlss_logjoint_gradient(&self.spec, &theta, &z[self.states.clone()], &self.data).expect("validated");
        let value = lp.value + ll;
        if !value.is_finite() {
            return (value, vec![0.0; z.len()]);
        }
        let mut grad = Vec::with_capacity(z.len());
        for i in 0..n_hyper {
            let lik = if params.contains(&i) { g_theta[i - params.start] } else { 0.0 };
            grad.push(lp.d(i) + lik);
        }
        grad.extend(g_x);
        (value, grad)
    }
}
