//! Models and target potentials described by a configuration.

use cesaro_lmc::bayes::{
    build_posterior, sample_dataset, Dataset, GaussianLocationModel, LogisticModel, ObservationModel, PPowerLocationModel,
    PriorSpec,
};
use cesaro_lmc::potentials::{
    builtin_gaussian_location, builtin_logistic, builtin_p_power, ConvexityProfile, LaplacianGradBound, Potential,
    Reprofiled,
};
use cesaro_lmc::rng::{mix_seed, ChainRng};
use cesaro_lmc::Result;

use crate::config::{ExperimentConfig, Family, ModelBlock};
use crate::error::CliError;

/// Stream index of the dataset seed under the base seed.
const DATA_STREAM: u64 = 0xda7a;

/// Any configured observation model.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Gaussian(GaussianLocationModel),
    PPower(PPowerLocationModel),
    Logistic(LogisticModel),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyModel::Gaussian($m) => $e,
            AnyModel::PPower($m) => $e,
            AnyModel::Logistic($m) => $e,
        }
    };
}

impl ObservationModel for AnyModel {
    fn model_id(&self) -> &'static str {
        delegate!(self, m => m.model_id())
    }
    fn obs_dim(&self) -> usize {
        delegate!(self, m => m.obs_dim())
    }
    fn param_dim(&self) -> usize {
        delegate!(self, m => m.param_dim())
    }
    fn value(&self, xi: &[f64], theta: &[f64]) -> f64 {
        delegate!(self, m => m.value(xi, theta))
    }
    fn add_grad(&self, xi: &[f64], theta: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.add_grad(xi, theta, out))
    }
    fn add_hess_vec(&self, xi: &[f64], theta: &[f64], v: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.add_hess_vec(xi, theta, v, out))
    }
    fn obs_lipschitz(&self, xi: &[f64]) -> f64 {
        delegate!(self, m => m.obs_lipschitz(xi))
    }
    fn obs_hessian_lipschitz(&self, xi: &[f64]) -> Option<f64> {
        delegate!(self, m => m.obs_hessian_lipschitz(xi))
    }
    fn obs_laplacian_grad(&self, xi: &[f64]) -> Option<LaplacianGradBound> {
        delegate!(self, m => m.obs_laplacian_grad(xi))
    }
    fn profile(&self) -> ConvexityProfile {
        delegate!(self, m => m.profile())
    }
    fn poincare_constant(&self) -> Option<f64> {
        delegate!(self, m => m.poincare_constant())
    }
    fn simulate(&self, theta_star: &[f64], n: usize, rng: &mut ChainRng) -> Result<Vec<f64>> {
        delegate!(self, m => m.simulate(theta_star, n, rng))
    }
}

impl AnyModel {
    pub fn from_block(block: &ModelBlock) -> std::result::Result<Self, CliError> {
        let p = &block.params;
        Ok(match block.family {
            Family::GaussianLocation => AnyModel::Gaussian(GaussianLocationModel::new(block.d, p.precision.unwrap_or(1.0))?),
            Family::PPower => AnyModel::PPower(PPowerLocationModel::new(block.d, required(p.p, "model.params.p")?)?),
            Family::Logistic => AnyModel::Logistic(LogisticModel::new(
                block.d,
                p.ridge.unwrap_or(0.0),
                required(p.design.clone(), "model.params.design")?,
            )?),
        })
    }

    /// Largest per-observation gradient Lipschitz constant over the
    /// observations the model can produce.
    pub fn observation_lipschitz(&self) -> f64 {
        match self {
            AnyModel::Logistic(m) => m
                .design()
                .iter()
                .map(|a| {
                    let mut xi = a.clone();
                    xi.push(1.0);
                    m.obs_lipschitz(&xi)
                })
                .fold(0.0, f64::max),
            _ => self.obs_lipschitz(&vec![0.0; self.obs_dim()]),
        }
    }
}

pub fn required<T>(v: Option<T>, key: &str) -> std::result::Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
}

/// The potential an experiment samples from.
pub struct Target {
    pub potential: Box<dyn Potential>,
    pub model: AnyModel,
    pub dataset: Option<Dataset>,
    /// Exact mean of `e^{−W}` when known in closed form.
    pub closed_form_mean: Option<Vec<f64>>,
}

pub fn theta_star(config: &ExperimentConfig) -> Vec<f64> {
    config.model.theta_star.clone().unwrap_or_else(|| vec![0.0; config.model.d])
}

pub fn data_seed(config: &ExperimentConfig, base_seed: u64) -> u64 {
    config
        .data
        .as_ref()
        .and_then(|d| d.seed)
        .unwrap_or_else(|| mix_seed(base_seed, DATA_STREAM))
}

/// Builds the posterior when the config has `data.n`, otherwise the model's
/// own potential.
pub fn build_target(config: &ExperimentConfig, base_seed: u64) -> std::result::Result<Target, CliError> {
    let block = &config.model;
    let model = AnyModel::from_block(block)?;
    let prior = config.prior.clone().unwrap_or_default();
    let (potential, dataset, closed_form_mean): (Box<dyn Potential>, _, _) = match config.data.as_ref().and_then(|d| d.n) {
        Some(n) => {
            let data = sample_dataset(&model, &theta_star(config), n, data_seed(config, base_seed))?;
            let closed = conjugate_mean(&model, &prior, &data);
            let post = build_posterior(model.clone(), data.clone(), prior)?;
            (Box::new(post), Some(data), closed)
        }
        None => {
            let p = &block.params;
            let center = p.center.clone().unwrap_or_else(|| vec![0.0; block.d]);
            match block.family {
                Family::GaussianLocation => (
                    Box::new(builtin_gaussian_location(block.d, &center, p.precision.unwrap_or(1.0))?),
                    None,
                    Some(center),
                ),
                Family::PPower => (
                    Box::new(builtin_p_power(block.d, &center, required(p.p, "model.params.p")?)?),
                    None,
                    Some(center),
                ),
                Family::Logistic => (
                    Box::new(builtin_logistic(
                        &required(p.design.clone(), "model.params.design")?,
                        &required(p.labels.clone(), "model.params.labels")?,
                        p.ridge.unwrap_or(0.0),
                    )?),
                    None,
                    None,
                ),
            }
        }
    };
    let potential: Box<dyn Potential> = match block.profile_override {
        Some(profile) => Box::new(Reprofiled::new(potential, profile)),
        None => potential,
    };
    Ok(Target {
        potential,
        model,
        dataset,
        closed_form_mean,
    })
}

/// `(τm₀ + ρ Σξᵢ)/(τ + nρ)` for the Gaussian-location model.
fn conjugate_mean(model: &AnyModel, prior: &PriorSpec, data: &Dataset) -> Option<Vec<f64>> {
    let AnyModel::Gaussian(g) = model else { return None };
    let rho = g.precision();
    let n = data.len() as f64;
    let xbar = data.mean_row();
    Some(
        xbar.iter()
            .enumerate()
            .map(|(j, x)| {
                let m0 = prior.mean.as_ref().map_or(0.0, |m| m[j]);
                (prior.precision * m0 + rho * n * x) / (prior.precision + n * rho)
            })
            .collect(),
    )
}
