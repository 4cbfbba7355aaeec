use serde::{Deserialize, Serialize};

use super::{Dataset, ObservationModel};
use crate::error::{param, Result};
use crate::numeric::pairwise_reduce;
use crate::potentials::{ConvexityProfile, LaplacianGradBound, Potential, SmoothnessInfo};

/// Observations per leaf of the deterministic reduction tree.
pub const REDUCTION_CHUNK: usize = 256;

/// Gaussian log-prior `V₀(θ) = (precision/2)|θ − mean|²`; precision 0 is flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub precision: f64,
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::gaussian(1.0)
    }
}

impl PriorSpec {
    pub fn gaussian(precision: f64) -> Self {
        Self { precision, mean: None }
    }

    pub fn flat() -> Self {
        Self::gaussian(0.0)
    }

    /// Lipschitz constant of `∇V₀`.
    pub fn lip(&self) -> f64 {
        self.precision
    }

    fn center(&self, i: usize) -> f64 {
        self.mean.as_ref().map_or(0.0, |m| m[i])
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let s: f64 = theta.iter().enumerate().map(|(i, t)| (t - self.center(i)).powi(2)).sum();
        0.5 * self.precision * s
    }

    pub fn add_grad(&self, theta: &[f64], out: &mut [f64]) {
        for (i, (o, t)) in out.iter_mut().zip(theta).enumerate() {
            *o += self.precision * (t - self.center(i));
        }
    }
}

/// `W̃ₙ(θ) = Σᵢ U(ξᵢ, θ) + V₀(θ)` with aggregated regularity constants.
///
/// Sums run over fixed chunks of observations combined by a pairwise tree,
/// so results are bit-identical for every thread count.
#[derive(Debug, Clone)]
pub struct PosteriorPotential<M> {
    model: M,
    data: Dataset,
    prior: PriorSpec,
    smoothness: SmoothnessInfo,
    profile: ConvexityProfile,
}

pub fn build_posterior<M: ObservationModel>(model: M, data: Dataset, prior: PriorSpec) -> Result<PosteriorPotential<M>> {
    let d = model.param_dim();
    if let Some(m) = &prior.mean {
        if m.len() != d {
            return param(format!("prior mean has length {} but the model has dimension {d}", m.len()));
        }
    }
    if !(prior.precision >= 0.0 && prior.precision.is_finite()) {
        return param(format!("prior precision must be non-negative, got {}", prior.precision));
    }
    let n = data.len();
    if n > 0 && data.obs_dim != model.obs_dim() {
        return param(format!(
            "observations have length {} but model {} expects {}",
            data.obs_dim,
            model.model_id(),
            model.obs_dim()
        ));
    }
    if n > 0 && data.model_id != model.model_id() {
        return param(format!("dataset was generated by {}, not {}", data.model_id, model.model_id()));
    }

    let lipschitz: f64 = data.rows().take(n).map(|xi| model.obs_lipschitz(xi)).sum::<f64>() + prior.lip();
    let hessian_lipschitz = data
        .rows()
        .take(n)
        .map(|xi| model.obs_hessian_lipschitz(xi))
        .sum::<Option<f64>>()
        .map(|v| if n == 0 { 0.0 } else { v });
    let laplacian_grad = aggregate_laplacian(&model, &data, n);
    let smoothness = SmoothnessInfo {
        lipschitz: lipschitz.max(f64::MIN_POSITIVE),
        hessian_lipschitz,
        laplacian_grad,
    };
    let nf = n as f64;
    let profile = if n == 0 {
        if prior.precision > 0.0 {
            ConvexityProfile::StronglyConvex { rho: prior.precision }
        } else {
            ConvexityProfile::Unverified
        }
    } else {
        match model.profile() {
            ConvexityProfile::StronglyConvex { rho } => ConvexityProfile::StronglyConvex { rho: nf * rho },
            // Jensen on t ↦ t^{-r} gives the lower constant; the upper side
            // only admits the flat bound λ_max ≤ n·c2 + prior curvature.
            ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } if q == r => ConvexityProfile::WeaklyConvexKl {
                c1: c1 * nf.powf(1.0 - r),
                c2: nf * c2 + prior.precision,
                q: 0.0,
                r,
            },
            _ => ConvexityProfile::Unverified,
        }
    };
    Ok(PosteriorPotential {
        model,
        data,
        prior,
        smoothness,
        profile,
    })
}

fn aggregate_laplacian<M: ObservationModel>(model: &M, data: &Dataset, n: usize) -> Option<LaplacianGradBound> {
    if n == 0 {
        return Some(LaplacianGradBound::Sup(0.0));
    }
    let mut sup = 0.0;
    let mut growth_root = 0.0;
    let mut growth_exp = None;
    for xi in data.rows().take(n) {
        match model.obs_laplacian_grad(xi)? {
            LaplacianGradBound::Sup(v) => sup += v,
            LaplacianGradBound::Growth { constant, exponent } => {
                growth_root += constant.sqrt();
                growth_exp = Some(exponent);
            }
        }
    }
    Some(match growth_exp {
        None => LaplacianGradBound::Sup(sup),
        Some(e) if sup == 0.0 => LaplacianGradBound::Growth {
            constant: growth_root * growth_root,
            exponent: e,
        },
        Some(_) => return None,
    })
}

impl<M: ObservationModel> PosteriorPotential<M> {
    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    fn chunks(&self) -> usize {
        self.n().div_ceil(REDUCTION_CHUNK)
    }

    fn chunk_rows(&self, c: usize) -> impl Iterator<Item = &[f64]> {
        let lo = c * REDUCTION_CHUNK;
        let hi = (lo + REDUCTION_CHUNK).min(self.n());
        (lo..hi).map(move |i| self.data.row(i))
    }
}

impl<M: ObservationModel> Potential for PosteriorPotential<M> {
    fn dim(&self) -> usize {
        self.model.param_dim()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let s = pairwise_reduce(self.chunks(), 1, &|c, out: &mut [f64]| {
            out[0] = self.chunk_rows(c).map(|xi| self.model.value(xi, theta)).sum();
        });
        s[0] + self.prior.value(theta)
    }

    fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        let g = pairwise_reduce(self.chunks(), self.dim(), &|c, acc: &mut [f64]| {
            for xi in self.chunk_rows(c) {
                self.model.add_grad(xi, theta, acc);
            }
        });
        out.copy_from_slice(&g);
        self.prior.add_grad(theta, out);
    }

    fn value_grad_into(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        let d = self.dim();
        let vg = pairwise_reduce(self.chunks(), d + 1, &|c, acc: &mut [f64]| {
            let (v, g) = acc.split_at_mut(1);
            for xi in self.chunk_rows(c) {
                v[0] += self.model.value(xi, theta);
                self.model.add_grad(xi, theta, g);
            }
        });
        out.copy_from_slice(&vg[1..]);
        self.prior.add_grad(theta, out);
        vg[0] + self.prior.value(theta)
    }

    fn hess_vec_into(&self, theta: &[f64], v: &[f64], out: &mut [f64]) {
        let h = pairwise_reduce(self.chunks(), self.dim(), &|c, acc: &mut [f64]| {
            for xi in self.chunk_rows(c) {
                self.model.add_hess_vec(xi, theta, v, acc);
            }
        });
        for ((o, hi), vi) in out.iter_mut().zip(&h).zip(v) {
            *o = hi + self.prior.precision * vi;
        }
    }

    fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }

    fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }

    /// The aggregated constants refer to the raw sum, so no shift is applied.
    fn offset(&self) -> Option<f64> {
        Some(0.0)
    }

    fn describe(&self) -> String {
        format!(
            "posterior({}, d={}, n={}, prior_precision={})",
            self.model.model_id(),
            self.dim(),
            self.n(),
            self.prior.precision
        )
    }
}
