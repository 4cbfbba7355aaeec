use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::CompensatedSum;
use crate::potentials::{find_minimizer, hessian_extreme_eigs, ConvexityProfile, Potential};
use crate::sampler::{replicate_runs, ChainConfig};

/// Replicates used by the reference chain.
pub const REFERENCE_REPLICATES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEstimate {
    pub mean: Vec<f64>,
    /// Per-coordinate empirical standard error of `mean`.
    pub std_error: Vec<f64>,
    pub gamma: f64,
    pub n_steps: usize,
    pub replicates: usize,
}

impl ReferenceEstimate {
    /// Euclidean norm of the standard-error vector.
    pub fn std_error_norm(&self) -> f64 {
        self.std_error.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Replicate-averaged Cesaro estimate of `π(I_d)`.
///
/// Step `γ = 1/(10(4dL + 1))`. The horizon is chosen so that the OU
/// asymptotic variance `2d/(ρ² t M)` of the averaged estimate is at most
/// `(eps_ref/3)²`, with `ρ` the strong-convexity constant, `c₁` for
/// weakly convex profiles, or the smallest Hessian eigenvalue at the mode.
pub fn reference_chain<P: Potential + ?Sized>(p: &P, eps_ref: f64, base_seed: u64) -> Result<ReferenceEstimate> {
    if !(eps_ref > 0.0 && eps_ref.is_finite()) {
        return param(format!("eps_ref must be positive, got {eps_ref}"));
    }
    let d = p.dim();
    let lip = p.smoothness().lipschitz;
    let start = p.minimizer_hint().map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
    let mode = find_minimizer(p, &start, 1e-10)?;
    let rho = match p.profile() {
        ConvexityProfile::StronglyConvex { rho } => *rho,
        ConvexityProfile::WeaklyConvexKl { c1, .. } => *c1,
        ConvexityProfile::Unverified => hessian_extreme_eigs(p, &mode, 1e-8)?.min,
    };
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Capability(format!("no positive curvature scale for the reference chain, got {rho}")));
    }
    let gamma = 1.0 / (10.0 * (4.0 * d as f64 * lip + 1.0));
    let m = REFERENCE_REPLICATES as f64;
    let horizon = 18.0 * d as f64 / (rho * rho * m * eps_ref * eps_ref);
    let n_steps = (horizon / gamma).ceil().max(1.0);
    if n_steps > 1e12 {
        return param(format!("reference chain would need {n_steps:e} steps"));
    }
    let n_steps = n_steps as usize;
    let cfg = ChainConfig::new(gamma, n_steps, mode, base_seed).with_log_stride(n_steps);
    let runs = replicate_runs(p, &cfg, REFERENCE_REPLICATES, base_seed)?;
    let mut estimates = Vec::with_capacity(runs.len());
    for run in runs {
        estimates.push(run?.cesaro);
    }
    let mut acc = CompensatedSum::new(d);
    estimates.iter().for_each(|e| acc.add(e));
    let mean = acc.mean();
    let std_error = (0..d)
        .map(|j| {
            let ss: f64 = estimates.iter().map(|e| (e[j] - mean[j]).powi(2)).sum();
            (ss / (m - 1.0) / m).sqrt()
        })
        .collect();
    Ok(ReferenceEstimate {
        mean,
        std_error,
        gamma,
        n_steps,
        replicates: REFERENCE_REPLICATES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature_posterior_mean;
    use crate::potentials::builtin_gaussian_location;

    #[test]
    fn gaussian_d5_within_four_standard_errors() {
        let target = [0.3, -0.2, 0.1, 0.0, 0.5];
        let g = builtin_gaussian_location(5, &target, 1.0).unwrap();
        let r = reference_chain(&g, 0.1, 11).unwrap();
        for (j, t) in target.iter().enumerate() {
            assert!((r.mean[j] - t).abs() < 4.0 * r.std_error[j] + 1e-12, "coord {j}: {r:?}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let g = builtin_gaussian_location(2, &[0.0, 1.0], 2.0).unwrap();
        let a = reference_chain(&g, 0.2, 5).unwrap();
        let b = reference_chain(&g, 0.2, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agrees_with_quadrature() {
        let feats = vec![vec![1.0, 0.5], vec![-0.3, 1.0], vec![0.8, -0.7], vec![0.2, 0.1]];
        let labels = vec![1.0, -1.0, 1.0, 1.0];
        let w = crate::potentials::builtin_logistic(&feats, &labels, 0.5).unwrap();
        let q = quadrature_posterior_mean(&w, 81, 10.0).unwrap();
        let r = reference_chain(&w, 0.05, 3).unwrap();
        for j in 0..2 {
            let tol = 4.0 * r.std_error[j] + q.error_estimate;
            assert!((r.mean[j] - q.mean[j]).abs() < tol, "coord {j}: {} vs {}", r.mean[j], q.mean[j]);
        }
    }
}
