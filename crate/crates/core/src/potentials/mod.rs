//! Potentials `W: R^d -> R` with gradient, Hessian-vector products and the
//! regularity metadata (smoothness, convexity profile) used by the tuning
//! rules and the verification battery.

pub(crate) mod builtin;
mod eigen;
mod minimize;
mod verify;

pub use builtin::{builtin_gaussian_location, builtin_logistic, builtin_p_power, GaussianLocation, Logistic, PPower};
pub use eigen::{dense_hessian, hessian_extreme_eigs, ExtremeEigs};
pub use minimize::find_minimizer;
pub use verify::{
    check_convexity_profile, check_gradient_fd, check_lipschitz, verify_grad_bounds, verify_kl_profile,
    normalization_anchor, BoundForm, ProbeViolation, ProfileReport, SLACK,
};

use serde::{Deserialize, Serialize};

/// Bound on `‖Δ⃗(∇W)‖_{2,∞}`, the sup over `x` of the Euclidean norm of the
/// Laplacian of the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianGradBound {
    /// Known value of the sup-norm for the current dimension.
    Sup(f64),
    /// `‖Δ⃗(∇W)‖²_{2,∞} ≤ constant · d^{2·exponent}`.
    Growth { constant: f64, exponent: f64 },
}

impl LaplacianGradBound {
    /// Sup-norm (not squared) in dimension `d`.
    pub fn sup_norm(&self, d: usize) -> f64 {
        match *self {
            Self::Sup(v) => v,
            Self::Growth { constant, exponent } => (constant * (d as f64).powf(2.0 * exponent)).sqrt(),
        }
    }

    /// Growth exponent; a plain sup value is treated as dimension-free.
    pub fn exponent(&self) -> f64 {
        match *self {
            Self::Sup(_) => 0.0,
            Self::Growth { exponent, .. } => exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessInfo {
    /// Lipschitz constant of `∇W`.
    pub lipschitz: f64,
    /// Lipschitz constant of `∇²W` in spectral norm.
    pub hessian_lipschitz: Option<f64>,
    pub laplacian_grad: Option<LaplacianGradBound>,
}

impl SmoothnessInfo {
    pub fn new(lipschitz: f64) -> Self {
        Self {
            lipschitz,
            hessian_lipschitz: None,
            laplacian_grad: None,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.lipschitz.is_finite() && self.lipschitz > 0.0) {
            return crate::error::param(format!("gradient Lipschitz constant must be positive, got {}", self.lipschitz));
        }
        if let Some(lt) = self.hessian_lipschitz {
            if !ok(lt) {
                return crate::error::param(format!("invalid Hessian Lipschitz constant {lt}"));
            }
        }
        match self.laplacian_grad {
            Some(LaplacianGradBound::Sup(v)) if !ok(v) => crate::error::param(format!("invalid Laplacian bound {v}")),
            Some(LaplacianGradBound::Growth { constant, exponent }) if !ok(constant) || !ok(exponent) => {
                crate::error::param("invalid Laplacian growth bound")
            }
            _ => Ok(()),
        }
    }
}

/// Curvature class of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexityProfile {
    /// `vᵀ∇²W(x)v ≥ rho |v|²`.
    StronglyConvex { rho: f64 },
    /// `c1 W^{-r} ≤ λ_min(∇²W) ≤ λ_max(∇²W) ≤ c2 W^{-q}` with `W` normalized so `min W = 1`.
    WeaklyConvexKl { c1: f64, c2: f64, q: f64, r: f64 },
    /// Convex, but no curvature constants are claimed.
    Unverified,
}

impl ConvexityProfile {
    pub fn validate(&self) -> crate::Result<()> {
        match *self {
            Self::StronglyConvex { rho } if !(rho > 0.0 && rho.is_finite()) => {
                crate::error::param(format!("strong convexity constant must be positive, got {rho}"))
            }
            Self::WeaklyConvexKl { c1, c2, q, r } => {
                if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
                    return crate::error::param(format!("KL constants must be positive, got c1={c1}, c2={c2}"));
                }
                if !(0.0 <= q && q <= r && r < 1.0) {
                    return crate::error::param(format!("KL exponents must satisfy 0 <= q <= r < 1, got q={q}, r={r}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, Self::StronglyConvex { .. })
    }
}

/// A twice differentiable convex potential.
///
/// Implementations are immutable after construction and may be shared
/// freely between worker threads.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn grad_into(&self, x: &[f64], out: &mut [f64]);

    /// Writes `∇W(x)` into `out` and returns `W(x)`.
    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.grad_into(x, out);
        self.value(x)
    }

    /// Writes `∇²W(x)·v` into `out`.
    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]);

    fn smoothness(&self) -> &SmoothnessInfo;

    fn profile(&self) -> &ConvexityProfile;

    fn minimizer_hint(&self) -> Option<&[f64]> {
        None
    }

    /// Additive constant making `W(x★) + offset = 1`, when known.
    fn offset(&self) -> Option<f64> {
        None
    }

    /// Short human-readable description used in manifests.
    fn describe(&self) -> String;
}

/// Allocating convenience wrappers.
pub trait PotentialExt: Potential {
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad_into(x, &mut g);
        g
    }

    fn hess_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.hess_vec_into(x, v, &mut out);
        out
    }
}

impl<P: Potential + ?Sized> PotentialExt for P {}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).grad_into(x, out)
    }
    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        (**self).value_grad_into(x, out)
    }
    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).hess_vec_into(x, v, out)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        (**self).smoothness()
    }
    fn profile(&self) -> &ConvexityProfile {
        (**self).profile()
    }
    fn minimizer_hint(&self) -> Option<&[f64]> {
        (**self).minimizer_hint()
    }
    fn offset(&self) -> Option<f64> {
        (**self).offset()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).grad_into(x, out)
    }
    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        (**self).value_grad_into(x, out)
    }
    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).hess_vec_into(x, v, out)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        (**self).smoothness()
    }
    fn profile(&self) -> &ConvexityProfile {
        (**self).profile()
    }
    fn minimizer_hint(&self) -> Option<&[f64]> {
        (**self).minimizer_hint()
    }
    fn offset(&self) -> Option<f64> {
        (**self).offset()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Wraps a potential and replaces its declared profile and/or smoothness.
///
/// Used to submit a potential under a different regularity claim, for
/// example a Gaussian declared as KL with `q = r = 0`, or a deliberately
/// wrong constant when testing that the verifiers catch it.
#[derive(Debug, Clone)]
pub struct Reprofiled<P> {
    inner: P,
    profile: ConvexityProfile,
    smoothness: SmoothnessInfo,
}

impl<P: Potential> Reprofiled<P> {
    pub fn new(inner: P, profile: ConvexityProfile) -> Self {
        let smoothness = inner.smoothness().clone();
        Self {
            inner,
            profile,
            smoothness,
        }
    }

    pub fn with_smoothness(mut self, smoothness: SmoothnessInfo) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Potential> Potential for Reprofiled<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.grad_into(x, out)
    }
    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.inner.value_grad_into(x, out)
    }
    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.inner.hess_vec_into(x, v, out)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }
    fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }
    fn minimizer_hint(&self) -> Option<&[f64]> {
        self.inner.minimizer_hint()
    }
    fn offset(&self) -> Option<f64> {
        self.inner.offset()
    }
    fn describe(&self) -> String {
        format!("{} [profile {:?}]", self.inner.describe(), self.profile)
    }
}
