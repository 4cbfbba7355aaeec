use crate::error::{param, Error, Result};
use crate::numeric::{dist_sq, dot};
use crate::potentials::{builtin::LOGISTIC_THIRD_DERIV_SUP, ConvexityProfile, LaplacianGradBound};
use crate::rng::ChainRng;

/// A family `π_θ(ξ) ∝ e^{−U(ξ, θ)}`, with derivatives taken in `θ`.
pub trait ObservationModel: Send + Sync {
    fn model_id(&self) -> &'static str;

    /// Length of one flattened observation `ξ`.
    fn obs_dim(&self) -> usize;

    /// Parameter dimension `d`.
    fn param_dim(&self) -> usize;

    fn value(&self, xi: &[f64], theta: &[f64]) -> f64;

    /// Adds `∇_θ U(ξ, θ)` into `out`.
    fn add_grad(&self, xi: &[f64], theta: &[f64], out: &mut [f64]);

    /// Adds `∇²_θ U(ξ, θ)·v` into `out`.
    fn add_hess_vec(&self, xi: &[f64], theta: &[f64], v: &[f64], out: &mut [f64]);

    /// Lipschitz constant of `θ ↦ ∇_θ U(ξ, θ)`.
    fn obs_lipschitz(&self, xi: &[f64]) -> f64;

    fn obs_hessian_lipschitz(&self, xi: &[f64]) -> Option<f64>;

    fn obs_laplacian_grad(&self, xi: &[f64]) -> Option<LaplacianGradBound>;

    /// Curvature class of `θ ↦ U(ξ, θ)`, uniform in `ξ`.
    fn profile(&self) -> ConvexityProfile;

    /// Poincaré constant of `π_θ`, when known exactly.
    fn poincare_constant(&self) -> Option<f64> {
        None
    }

    /// `n` i.i.d. draws from `π_θ★`, flattened.
    fn simulate(&self, _theta_star: &[f64], _n: usize, _rng: &mut ChainRng) -> Result<Vec<f64>> {
        Err(Error::Capability(format!("model {} has no exact simulator", self.model_id())))
    }
}

/// `ξ ~ N(θ, ρ⁻¹ I_d)`, `U(ξ, θ) = (ρ/2)|ξ − θ|²`.
#[derive(Debug, Clone)]
pub struct GaussianLocationModel {
    dim: usize,
    precision: f64,
}

impl GaussianLocationModel {
    pub fn new(dim: usize, precision: f64) -> Result<Self> {
        if dim == 0 {
            return param("dimension must be at least 1");
        }
        if !(precision > 0.0 && precision.is_finite()) {
            return param(format!("precision must be positive, got {precision}"));
        }
        Ok(Self { dim, precision })
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }
}

impl ObservationModel for GaussianLocationModel {
    fn model_id(&self) -> &'static str {
        "gaussian_location"
    }
    fn obs_dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, xi: &[f64], theta: &[f64]) -> f64 {
        0.5 * self.precision * dist_sq(xi, theta)
    }
    fn add_grad(&self, xi: &[f64], theta: &[f64], out: &mut [f64]) {
        for ((o, x), t) in out.iter_mut().zip(xi).zip(theta) {
            *o += self.precision * (t - x);
        }
    }
    fn add_hess_vec(&self, _xi: &[f64], _theta: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o += self.precision * vi;
        }
    }
    fn obs_lipschitz(&self, _xi: &[f64]) -> f64 {
        self.precision
    }
    fn obs_hessian_lipschitz(&self, _xi: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn obs_laplacian_grad(&self, _xi: &[f64]) -> Option<LaplacianGradBound> {
        Some(LaplacianGradBound::Sup(0.0))
    }
    fn profile(&self) -> ConvexityProfile {
        ConvexityProfile::StronglyConvex { rho: self.precision }
    }
    fn poincare_constant(&self) -> Option<f64> {
        Some(1.0 / self.precision)
    }
    fn simulate(&self, theta_star: &[f64], n: usize, rng: &mut ChainRng) -> Result<Vec<f64>> {
        if theta_star.len() != self.dim {
            return param("theta_star does not match the model dimension");
        }
        let sd = self.precision.sqrt().recip();
        let mut out = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            for t in theta_star {
                out.push(t + sd * rng.normal());
            }
        }
        Ok(out)
    }
}

/// `U(ξ, θ) = (1 + |ξ − θ|²)^p`, a location family with KL curvature.
#[derive(Debug, Clone)]
pub struct PPowerLocationModel {
    dim: usize,
    p: f64,
}

impl PPowerLocationModel {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return param("dimension must be at least 1");
        }
        if !(p > 0.5 && p <= 1.0) {
            return param(format!("p-power exponent must lie in (1/2, 1], got {p}"));
        }
        Ok(Self { dim, p })
    }
}

impl ObservationModel for PPowerLocationModel {
    fn model_id(&self) -> &'static str {
        "p_power_location"
    }
    fn obs_dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, xi: &[f64], theta: &[f64]) -> f64 {
        (1.0 + dist_sq(xi, theta)).powf(self.p)
    }
    fn add_grad(&self, xi: &[f64], theta: &[f64], out: &mut [f64]) {
        let s = 1.0 + dist_sq(xi, theta);
        let c = 2.0 * self.p * s.powf(self.p - 1.0);
        for ((o, x), t) in out.iter_mut().zip(xi).zip(theta) {
            *o += c * (t - x);
        }
    }
    fn add_hess_vec(&self, xi: &[f64], theta: &[f64], v: &[f64], out: &mut [f64]) {
        let p = self.p;
        let s = 1.0 + dist_sq(xi, theta);
        let sp1 = s.powf(p - 1.0);
        let a = 2.0 * p * sp1;
        let b = 4.0 * p * (p - 1.0) * sp1 / s;
        let proj: f64 = theta.iter().zip(xi).zip(v).map(|((t, x), vi)| (t - x) * vi).sum();
        for (((o, t), x), vi) in out.iter_mut().zip(theta).zip(xi).zip(v) {
            *o += a * vi + b * proj * (t - x);
        }
    }
    fn obs_lipschitz(&self, _xi: &[f64]) -> f64 {
        2.0 * self.p
    }
    fn obs_hessian_lipschitz(&self, _xi: &[f64]) -> Option<f64> {
        let p = self.p;
        Some(4.0 * p * (1.0 - p) * (7.0 - 2.0 * p))
    }
    fn obs_laplacian_grad(&self, _xi: &[f64]) -> Option<LaplacianGradBound> {
        let p = self.p;
        let k = 4.0 * p * (1.0 - p) * (7.0 - 2.0 * p);
        Some(LaplacianGradBound::Growth {
            constant: k * k,
            exponent: 1.0,
        })
    }
    fn profile(&self) -> ConvexityProfile {
        let p = self.p;
        let r = (1.0 - p) / p;
        ConvexityProfile::WeaklyConvexKl {
            c1: 2.0 * p * (2.0 * p - 1.0),
            c2: 2.0 * p,
            q: r,
            r,
        }
    }
}

/// Logistic regression with observations `ξ = (a, y)`, `y ∈ {−1, +1}`:
/// `U(ξ, θ) = log(1 + e^{−y⟨a, θ⟩}) + (μ/2)|θ|²`.
///
/// Simulation cycles through the rows of a fixed design and draws
/// `y = +1` with probability `σ(⟨a, θ★⟩)`.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    dim: usize,
    ridge: f64,
    design: Vec<Vec<f64>>,
}

impl LogisticModel {
    pub fn new(dim: usize, ridge: f64, design: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return param("dimension must be at least 1");
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return param(format!("ridge must be non-negative, got {ridge}"));
        }
        if design.iter().any(|a| a.len() != dim) {
            return param("design rows must have the model dimension");
        }
        Ok(Self { dim, ridge, design })
    }

    pub fn design(&self) -> &[Vec<f64>] {
        &self.design
    }

    fn split<'a>(&self, xi: &'a [f64]) -> (&'a [f64], f64) {
        (&xi[..self.dim], xi[self.dim])
    }
}

impl ObservationModel for LogisticModel {
    fn model_id(&self) -> &'static str {
        "logistic"
    }
    fn obs_dim(&self) -> usize {
        self.dim + 1
    }
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, xi: &[f64], theta: &[f64]) -> f64 {
        let (a, y) = self.split(xi);
        crate::potentials::builtin::log1pexp(-y * dot(a, theta)) + 0.5 * self.ridge * dot(theta, theta)
    }
    fn add_grad(&self, xi: &[f64], theta: &[f64], out: &mut [f64]) {
        let (a, y) = self.split(xi);
        let w = -y * crate::potentials::builtin::sigmoid(-y * dot(a, theta));
        for ((o, ai), t) in out.iter_mut().zip(a).zip(theta) {
            *o += w * ai + self.ridge * t;
        }
    }
    fn add_hess_vec(&self, xi: &[f64], theta: &[f64], v: &[f64], out: &mut [f64]) {
        let (a, _) = self.split(xi);
        let s = crate::potentials::builtin::sigmoid(dot(a, theta));
        let w = s * (1.0 - s) * dot(a, v);
        for ((o, ai), vi) in out.iter_mut().zip(a).zip(v) {
            *o += w * ai + self.ridge * vi;
        }
    }
    fn obs_lipschitz(&self, xi: &[f64]) -> f64 {
        let (a, _) = self.split(xi);
        dot(a, a) / 4.0 + self.ridge
    }
    fn obs_hessian_lipschitz(&self, xi: &[f64]) -> Option<f64> {
        let (a, _) = self.split(xi);
        Some(LOGISTIC_THIRD_DERIV_SUP * dot(a, a).powf(1.5))
    }
    fn obs_laplacian_grad(&self, xi: &[f64]) -> Option<LaplacianGradBound> {
        self.obs_hessian_lipschitz(xi).map(LaplacianGradBound::Sup)
    }
    fn profile(&self) -> ConvexityProfile {
        if self.ridge > 0.0 {
            ConvexityProfile::StronglyConvex { rho: self.ridge }
        } else {
            ConvexityProfile::Unverified
        }
    }
    fn simulate(&self, theta_star: &[f64], n: usize, rng: &mut ChainRng) -> Result<Vec<f64>> {
        if self.design.is_empty() {
            return Err(Error::Capability("logistic simulation needs a design".into()));
        }
        if theta_star.len() != self.dim {
            return param("theta_star does not match the model dimension");
        }
        let mut out = Vec::with_capacity(n * (self.dim + 1));
        for i in 0..n {
            let a = &self.design[i % self.design.len()];
            let prob = crate::potentials::builtin::sigmoid(dot(a, theta_star));
            out.extend_from_slice(a);
            out.push(if rng.uniform() < prob { 1.0 } else { -1.0 });
        }
        Ok(out)
    }
}
