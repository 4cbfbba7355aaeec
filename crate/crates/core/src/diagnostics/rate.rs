use serde::{Deserialize, Serialize};

use crate::bayes::{build_posterior, sample_dataset, Dataset, ObservationModel, PriorSpec};
use crate::error::{param, Error, Result};
use crate::numeric::{mean, sample_variance};
use crate::oracle::quadrature_posterior_mean;
use crate::sampler::{replicate_seed, Execution};
use crate::sampler::map_indices;

/// Fits with a lower `r²` never pass a slope assertion.
pub const MIN_R2: f64 = 0.9;

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl RateFit {
    pub fn fit(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return param("a rate fit needs at least two paired points");
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return param("rate fit points must be finite");
        }
        let mx = mean(&x);
        let my = mean(&y);
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        if !(sxx > 0.0) {
            return param("rate fit needs at least two distinct x values");
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
        let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
        Ok(Self { x, y, slope, intercept, r2 })
    }

    /// `|slope − target| ≤ tol` with `r² ≥ max(min_r2, MIN_R2)`.
    pub fn slope_within(&self, target: f64, tol: f64, min_r2: f64) -> bool {
        self.r2 >= min_r2.max(MIN_R2) && (self.slope - target).abs() <= tol
    }
}

/// How the posterior mean of each simulated dataset is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum PosteriorMeanMethod {
    /// Gaussian-location model under a Gaussian or flat prior.
    Conjugate,
    Quadrature { nodes_per_axis: usize, k_sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    /// Mean over datasets of `|θ̃ₙ − θ★|²`.
    pub mse: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub points: Vec<RatePoint>,
    /// `log MSE` against `log(n / log n)`.
    pub fit: RateFit,
    /// `−1/α_c`.
    pub expected_slope: f64,
    pub base_seed: u64,
}

/// Posterior-mean risk across sample sizes.
///
/// For each `n`, `M` datasets are drawn under `θ★` with seeds
/// `replicate_seed(replicate_seed(base_seed, n), i)`.
#[allow(clippy::too_many_arguments)]
pub fn bayes_rate_experiment<M: ObservationModel + Clone>(
    model: &M,
    prior: &PriorSpec,
    theta_star: &[f64],
    alpha_c: f64,
    n_grid: &[usize],
    replicates: usize,
    method: PosteriorMeanMethod,
    base_seed: u64,
) -> Result<RateReport> {
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return param("n_grid must be strictly ascending with at least four points");
    }
    if n_grid[0] < 2 {
        return param("sample sizes must be at least 2");
    }
    if !(alpha_c > 0.0) || replicates < 2 {
        return param("need alpha_c > 0 and at least two replicates");
    }
    if theta_star.len() != model.param_dim() {
        return param("theta_star does not match the model dimension");
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let stream = replicate_seed(base_seed, n);
        let errors: Vec<Result<f64>> = map_indices(replicates, Execution::default(), |i| {
            let data = sample_dataset(model, theta_star, n, replicate_seed(stream, i))?;
            let est = posterior_mean(model, prior, data, method)?;
            Ok(est.iter().zip(theta_star).map(|(a, b)| (a - b) * (a - b)).sum())
        });
        let errors = errors.into_iter().collect::<Result<Vec<f64>>>()?;
        let mse = mean(&errors);
        points.push(RatePoint {
            n,
            mse,
            std_error: (sample_variance(&errors) / replicates as f64).sqrt(),
        });
    }
    let x = points.iter().map(|pt| (pt.n as f64 / (pt.n as f64).ln()).ln()).collect();
    let y = points.iter().map(|pt| pt.mse.ln()).collect();
    Ok(RateReport {
        fit: RateFit::fit(x, y)?,
        points,
        expected_slope: -1.0 / alpha_c,
        base_seed,
    })
}

fn posterior_mean<M: ObservationModel + Clone>(
    model: &M,
    prior: &PriorSpec,
    data: Dataset,
    method: PosteriorMeanMethod,
) -> Result<Vec<f64>> {
    match method {
        PosteriorMeanMethod::Conjugate => {
            if model.model_id() != "gaussian_location" {
                return Err(Error::Capability(format!("no conjugate posterior mean for {}", model.model_id())));
            }
            let d = model.param_dim();
            let mut e0 = vec![0.0; d];
            e0[0] = 1.0;
            let mut h = vec![0.0; d];
            model.add_hess_vec(data.row(0), &e0, &e0, &mut h);
            let rho = h[0];
            let tau = prior.precision;
            let n = data.len() as f64;
            let xbar = data.mean_row();
            Ok((0..d)
                .map(|j| {
                    let m0 = prior.mean.as_ref().map_or(0.0, |m| m[j]);
                    (tau * m0 + rho * n * xbar[j]) / (tau + n * rho)
                })
                .collect())
        }
        PosteriorMeanMethod::Quadrature { nodes_per_axis, k_sigma } => {
            let post = build_posterior(model.clone(), data, prior.clone())?;
            Ok(quadrature_posterior_mean(&post, nodes_per_axis, k_sigma)?.mean)
        }
    }
}
