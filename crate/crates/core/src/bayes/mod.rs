//! Observation models, datasets, priors and the aggregated posterior
//! potential `W̃ₙ(θ) = Σᵢ U(ξᵢ, θ) + V₀(θ)`.

mod dataset;
mod models;
mod posterior;

pub use dataset::{sample_dataset, Dataset, DatasetManifest};
pub use models::{GaussianLocationModel, LogisticModel, ObservationModel, PPowerLocationModel};
pub use posterior::{build_posterior, PosteriorPotential, PriorSpec};

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Statistical accuracy `ε_n² = (C_P L²)^{1/α} (d log n / n)^{1/α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonN {
    pub eps_sq: f64,
    pub eps: f64,
    /// Whether `b₁ ε_n^α ≤ 1`.
    pub valid: bool,
}

pub fn epsilon_n(poincare: f64, lipschitz: f64, alpha: f64, d: usize, n: usize, b1: f64) -> Result<EpsilonN> {
    if n < 2 {
        return param(format!("epsilon_n needs n >= 2, got {n}"));
    }
    if !(alpha >= 1.0) {
        return param(format!("identifiability exponent must be at least 1, got {alpha}"));
    }
    if !(poincare > 0.0 && lipschitz > 0.0 && b1 > 0.0) || d == 0 {
        return param("Poincare constant, L, b1 and d must be positive");
    }
    let nf = n as f64;
    let eps_sq = (poincare * lipschitz * lipschitz).powf(1.0 / alpha) * (d as f64 * nf.ln() / nf).powf(1.0 / alpha);
    let eps = eps_sq.sqrt();
    Ok(EpsilonN {
        eps_sq,
        eps,
        valid: b1 * eps.powf(alpha) <= 1.0,
    })
}

/// `epsilon_n` at real-valued `n`, used where `log n = 1` is wanted exactly.
pub fn epsilon_n_real(poincare: f64, lipschitz: f64, alpha: f64, d: usize, n: f64) -> Result<f64> {
    if !(n > 1.0) {
        return param(format!("epsilon_n needs n > 1, got {n}"));
    }
    Ok((poincare * lipschitz * lipschitz).powf(1.0 / alpha) * (d as f64 * n.ln() / n).powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epsilon_examples() {
        let e = epsilon_n_real(1.0, 1.0, 1.0, 1, std::f64::consts::E).unwrap();
        assert_relative_eq!(e, 1.0 / std::f64::consts::E, max_relative = 1e-15);
        let e = epsilon_n(1.0, 1.0, 2.0, 2, 100, 1.0).unwrap();
        assert_relative_eq!(e.eps_sq, (2.0 * 100f64.ln() / 100.0).sqrt(), max_relative = 1e-15);
        let a = epsilon_n(1.0, 1.0, 1.0, 3, 500, 1.0).unwrap();
        let b = epsilon_n(1.0, 1.0, 1.0, 6, 500, 1.0).unwrap();
        assert_relative_eq!(b.eps_sq, 2.0 * a.eps_sq, max_relative = 1e-15);
        assert!(epsilon_n(1.0, 1.0, 1.0, 1, 1, 1.0).is_err());
    }

    #[test]
    fn validity_flag() {
        let e = epsilon_n(1.0, 1.0, 1.0, 1, 100, 1.0).unwrap();
        assert!(e.valid);
        let e = epsilon_n(1.0, 1.0, 1.0, 1, 100, 1e3).unwrap();
        assert!(!e.valid);
    }
}
