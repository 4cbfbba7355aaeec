use super::{ConvexityProfile, LaplacianGradBound, Potential, SmoothnessInfo};
use crate::error::{param, Result};
use crate::numeric::{dist_sq, dot};

/// `W(x) = (ρ/2)|x − mean|²`.
#[derive(Debug, Clone)]
pub struct GaussianLocation {
    mean: Vec<f64>,
    precision: f64,
    smoothness: SmoothnessInfo,
    profile: ConvexityProfile,
}

impl GaussianLocation {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }
}

pub fn builtin_gaussian_location(dim: usize, mean: &[f64], precision: f64) -> Result<GaussianLocation> {
    if dim == 0 {
        return param("dimension must be at least 1");
    }
    if mean.len() != dim {
        return param(format!("mean has length {} but dimension is {dim}", mean.len()));
    }
    if !(precision > 0.0 && precision.is_finite()) {
        return param(format!("precision must be positive, got {precision}"));
    }
    Ok(GaussianLocation {
        mean: mean.to_vec(),
        precision,
        smoothness: SmoothnessInfo {
            lipschitz: precision,
            hessian_lipschitz: Some(0.0),
            laplacian_grad: Some(LaplacianGradBound::Sup(0.0)),
        },
        profile: ConvexityProfile::StronglyConvex { rho: precision },
    })
}

impl Potential for GaussianLocation {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.precision * dist_sq(x, &self.mean)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), mi) in out.iter_mut().zip(x).zip(&self.mean) {
            *o = self.precision * (xi - mi);
        }
    }

    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let mut v = 0.0;
        for ((o, xi), mi) in out.iter_mut().zip(x).zip(&self.mean) {
            let dx = xi - mi;
            v += dx * dx;
            *o = self.precision * dx;
        }
        0.5 * self.precision * v
    }

    fn hess_vec_into(&self, _x: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o = self.precision * vi;
        }
    }

    fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }

    fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }

    fn minimizer_hint(&self) -> Option<&[f64]> {
        Some(&self.mean)
    }

    fn offset(&self) -> Option<f64> {
        Some(1.0)
    }

    fn describe(&self) -> String {
        format!("gaussian_location(d={}, precision={})", self.mean.len(), self.precision)
    }
}

/// `W(x) = (1 + |x − center|²)^p` with `p ∈ (1/2, 1]`.
///
/// KL profile with `r = q = (1 − p)/p`, `c1 = 2p(2p − 1)`, `c2 = 2p`.
#[derive(Debug, Clone)]
pub struct PPower {
    center: Vec<f64>,
    p: f64,
    smoothness: SmoothnessInfo,
    profile: ConvexityProfile,
}

impl PPower {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }
}

pub fn builtin_p_power(dim: usize, center: &[f64], p: f64) -> Result<PPower> {
    if dim == 0 {
        return param("dimension must be at least 1");
    }
    if center.len() != dim {
        return param(format!("center has length {} but dimension is {dim}", center.len()));
    }
    if !(p > 0.5 && p <= 1.0) {
        return param(format!("p-power exponent must lie in (1/2, 1], got {p}"));
    }
    let r = (1.0 - p) / p;
    // Third-derivative bounds from |x| s^{-1/2} <= 1 with s = 1 + |x|²:
    // spectral Lipschitz constant of the Hessian <= 4p(1-p)(7-2p),
    // |Δ∇W| <= 4p(1-p)(d + 6 - 2p) <= 4p(1-p)(7-2p) d.
    let k = 4.0 * p * (1.0 - p) * (7.0 - 2.0 * p);
    Ok(PPower {
        center: center.to_vec(),
        p,
        smoothness: SmoothnessInfo {
            lipschitz: 2.0 * p,
            hessian_lipschitz: Some(k),
            laplacian_grad: Some(LaplacianGradBound::Growth {
                constant: k * k,
                exponent: 1.0,
            }),
        },
        profile: ConvexityProfile::WeaklyConvexKl {
            c1: 2.0 * p * (2.0 * p - 1.0),
            c2: 2.0 * p,
            q: r,
            r,
        },
    })
}

impl Potential for PPower {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (1.0 + dist_sq(x, &self.center)).powf(self.p)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.value_grad_into(x, out);
    }

    fn value_grad_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let s = 1.0 + dist_sq(x, &self.center);
        let w = s.powf(self.p);
        let scale = 2.0 * self.p * w / s;
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = scale * (xi - ci);
        }
        w
    }

    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let p = self.p;
        let s = 1.0 + dist_sq(x, &self.center);
        let sp1 = s.powf(p - 1.0);
        let a = 2.0 * p * sp1;
        let b = 4.0 * p * (p - 1.0) * sp1 / s;
        let proj: f64 = x.iter().zip(&self.center).zip(v).map(|((xi, ci), vi)| (xi - ci) * vi).sum();
        for (((o, xi), ci), vi) in out.iter_mut().zip(x).zip(&self.center).zip(v) {
            *o = a * vi + b * proj * (xi - ci);
        }
    }

    fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }

    fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }

    fn minimizer_hint(&self) -> Option<&[f64]> {
        Some(&self.center)
    }

    fn offset(&self) -> Option<f64> {
        Some(0.0)
    }

    fn describe(&self) -> String {
        format!("p_power(d={}, p={})", self.center.len(), self.p)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub(crate) fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Sup of `|d³/dz³ log(1 + e^z)|`, reached where `σ(1−σ)(1−2σ)` peaks.
pub(crate) const LOGISTIC_THIRD_DERIV_SUP: f64 = 0.096_225_044_864_937_6;

/// `W(θ) = Σ_i [log(1 + exp(−y_i⟨a_i, θ⟩)) + (μ/2)|θ|²]`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    ridge: f64,
    smoothness: SmoothnessInfo,
    profile: ConvexityProfile,
}

impl Logistic {
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn builtin_logistic(features: &[Vec<f64>], labels: &[f64], ridge: f64) -> Result<Logistic> {
    if features.is_empty() {
        return param("logistic model needs at least one observation");
    }
    if features.len() != labels.len() {
        return param(format!("{} feature rows but {} labels", features.len(), labels.len()));
    }
    let dim = features[0].len();
    if dim == 0 {
        return param("feature dimension must be at least 1");
    }
    if features.iter().any(|a| a.len() != dim) {
        return param("feature rows have inconsistent lengths");
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return param("labels must be -1 or +1");
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return param(format!("ridge must be non-negative, got {ridge}"));
    }
    let m = labels.len() as f64;
    let sq: f64 = features.iter().map(|a| dot(a, a)).sum();
    let cube: f64 = features.iter().map(|a| dot(a, a).powf(1.5)).sum();
    let lipschitz = (sq / 4.0 + m * ridge).max(f64::MIN_POSITIVE);
    let profile = if ridge > 0.0 {
        ConvexityProfile::StronglyConvex { rho: m * ridge }
    } else {
        ConvexityProfile::Unverified
    };
    Ok(Logistic {
        features: features.to_vec(),
        labels: labels.to_vec(),
        ridge,
        smoothness: SmoothnessInfo {
            lipschitz,
            hessian_lipschitz: Some(LOGISTIC_THIRD_DERIV_SUP * cube),
            laplacian_grad: Some(LaplacianGradBound::Sup(LOGISTIC_THIRD_DERIV_SUP * cube)),
        },
        profile,
    })
}

impl Potential for Logistic {
    fn dim(&self) -> usize {
        self.features[0].len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = self.labels.len() as f64;
        let data: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(a, y)| log1pexp(-y * dot(a, x)))
            .sum();
        data + 0.5 * m * self.ridge * dot(x, x)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.labels.len() as f64;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = m * self.ridge * xi;
        }
        for (a, y) in self.features.iter().zip(&self.labels) {
            let w = -y * sigmoid(-y * dot(a, x));
            for (o, ai) in out.iter_mut().zip(a) {
                *o += w * ai;
            }
        }
    }

    fn hess_vec_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let m = self.labels.len() as f64;
        for (o, vi) in out.iter_mut().zip(v) {
            *o = m * self.ridge * vi;
        }
        for a in &self.features {
            let s = sigmoid(dot(a, x));
            let w = s * (1.0 - s) * dot(a, v);
            for (o, ai) in out.iter_mut().zip(a) {
                *o += w * ai;
            }
        }
    }

    fn smoothness(&self) -> &SmoothnessInfo {
        &self.smoothness
    }

    fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }

    fn describe(&self) -> String {
        format!(
            "logistic(d={}, m={}, ridge={})",
            self.dim(),
            self.labels.len(),
            self.ridge
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialExt;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_examples() {
        let g = builtin_gaussian_location(1, &[0.0], 1.0).unwrap();
        assert_eq!(g.value(&[2.0]), 2.0);
        let g = builtin_gaussian_location(3, &[0.0; 3], 1.0).unwrap();
        assert_eq!(g.grad(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        let g = builtin_gaussian_location(2, &[5.0, -3.0], 2.0).unwrap();
        assert_eq!(g.grad(&[5.0, -3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn gaussian_rejects_bad_precision() {
        assert!(matches!(
            builtin_gaussian_location(1, &[0.0], 0.0),
            Err(crate::Error::Parameter(_))
        ));
        assert!(builtin_gaussian_location(1, &[0.0], -1.0).is_err());
        assert!(builtin_gaussian_location(2, &[0.0], 1.0).is_err());
    }

    #[test]
    fn p_power_examples() {
        let w = builtin_p_power(1, &[0.0], 1.0).unwrap();
        assert_relative_eq!(w.value(&[1.0]), 2.0, epsilon = 1e-15);
        assert_relative_eq!(w.grad(&[1.0])[0], 2.0, epsilon = 1e-15);
        // Hessian at the center is 2p·I.
        let w = builtin_p_power(2, &[0.0, 0.0], 0.75).unwrap();
        assert_eq!(w.hess_vec(&[0.0, 0.0], &[1.0, 0.0]), vec![1.5, 0.0]);
        assert_eq!(w.hess_vec(&[0.0, 0.0], &[0.0, 1.0]), vec![0.0, 1.5]);
    }

    #[test]
    fn p_power_rejects_out_of_range_exponent() {
        for p in [0.5, 0.2, 1.01, f64::NAN] {
            assert!(builtin_p_power(1, &[0.0], p).is_err(), "p={p}");
        }
    }

    #[test]
    fn p_power_profile_constants() {
        let w = builtin_p_power(3, &[0.0; 3], 0.75).unwrap();
        match *w.profile() {
            ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } => {
                assert_relative_eq!(c1, 0.75);
                assert_relative_eq!(c2, 1.5);
                assert_relative_eq!(q, 1.0 / 3.0);
                assert_relative_eq!(r, 1.0 / 3.0);
            }
            _ => panic!("expected KL profile"),
        }
    }

    #[test]
    fn logistic_examples() {
        let w = builtin_logistic(&[vec![0.0]], &[1.0], 0.0).unwrap();
        assert_relative_eq!(w.value(&[3.7]), std::f64::consts::LN_2, epsilon = 1e-15);
        let w = builtin_logistic(&[vec![1.0]], &[1.0], 0.0).unwrap();
        assert_relative_eq!(w.grad(&[0.0])[0], -0.5, epsilon = 1e-15);
        assert_eq!(*w.profile(), ConvexityProfile::Unverified);
        // Hessian via central differences of the gradient.
        let w = builtin_logistic(&[vec![1.0]], &[1.0], 1.0).unwrap();
        let h = 1e-5;
        let fd = (w.grad(&[h])[0] - w.grad(&[-h])[0]) / (2.0 * h);
        assert_relative_eq!(fd, 1.25, epsilon = 1e-8);
        assert_relative_eq!(w.hess_vec(&[0.0], &[1.0])[0], 1.25, epsilon = 1e-15);
    }

    #[test]
    fn logistic_rejects_empty_and_bad_labels() {
        assert!(builtin_logistic(&[], &[], 1.0).is_err());
        assert!(builtin_logistic(&[vec![1.0]], &[0.5], 1.0).is_err());
    }

    #[test]
    fn log1pexp_is_stable() {
        assert_eq!(log1pexp(1000.0), 1000.0);
        assert!(log1pexp(-1000.0) >= 0.0);
        assert_relative_eq!(log1pexp(0.0), std::f64::consts::LN_2);
        assert_relative_eq!(sigmoid(-800.0) + sigmoid(800.0), 1.0);
    }

    #[test]
    fn third_derivative_constant() {
        // max of s(1-s)(1-2s) over s in (0, 1/2)
        let best = (1..100_000)
            .map(|i| {
                let s = 0.5 * i as f64 / 100_000.0;
                s * (1.0 - s) * (1.0 - 2.0 * s)
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(best, LOGISTIC_THIRD_DERIV_SUP, epsilon = 1e-9);
    }
}
