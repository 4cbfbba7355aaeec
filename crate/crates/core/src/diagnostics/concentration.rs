use serde::{Deserialize, Serialize};

use super::binomial_slack;
use crate::bayes::ObservationModel;
use crate::error::{param, Error, Result};
use crate::numeric::dist;
use crate::rng::ChainRng;
use crate::sampler::{map_indices, replicate_seed, Execution};

/// `2 exp(−n (δ²/(4k²C_P) ∧ δ/(2k√C_P)))` for a `k`-Lipschitz statistic.
pub fn deviation_bound(n: usize, delta: f64, k: f64, poincare: f64) -> f64 {
    let rate = (delta * delta / (4.0 * k * k * poincare)).min(delta / (2.0 * k * poincare.sqrt()));
    2.0 * (-(n as f64) * rate).exp()
}

/// `2d exp(−n (δ²/(4L²C_P d) ∧ δ/(2L√(C_P d))))` for the averaged score.
pub fn gradient_deviation_bound(n: usize, delta: f64, lipschitz: f64, poincare: f64, d: usize) -> f64 {
    let cd = poincare * d as f64;
    let rate = (delta * delta / (4.0 * lipschitz * lipschitz * cd)).min(delta / (2.0 * lipschitz * cd.sqrt()));
    2.0 * d as f64 * (-(n as f64) * rate).exp()
}

/// `2 exp(−n (c²/(16C_P) ∧ c/(4√C_P)))`, both error types of the test.
pub fn test_error_bound(n: usize, c: f64, poincare: f64) -> f64 {
    let rate = (c * c / (16.0 * poincare)).min(c / (4.0 * poincare.sqrt()));
    2.0 * (-(n as f64) * rate).exp()
}

/// A scalar statistic of one observation with its exact mean under the
/// sampling parameter.
pub struct LipschitzStatistic<'a> {
    pub f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub lipschitz: f64,
    pub mean: f64,
}

/// Empirical frequency of an event against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub delta: f64,
    pub frequency: f64,
    pub bound: f64,
    /// Three binomial standard errors at the bound.
    pub slack: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn new(delta: f64, hits: usize, m: usize, bound: f64) -> Self {
        let frequency = hits as f64 / m as f64;
        let slack = binomial_slack(bound, m);
        Self {
            delta,
            frequency,
            bound,
            slack,
            passed: frequency <= bound + slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTable {
    pub n: usize,
    pub simulations: usize,
    pub poincare: f64,
    pub rows: Vec<BoundCheck>,
}

impl ConcentrationTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

fn resolve_poincare<M: ObservationModel + ?Sized>(model: &M, poincare: Option<f64>) -> Result<f64> {
    let cp = match poincare {
        Some(c) => c,
        None => model
            .poincare_constant()
            .ok_or_else(|| Error::Capability(format!("{} has no known Poincare constant", model.model_id())))?,
    };
    if !(cp > 0.0 && cp.is_finite()) {
        return param(format!("Poincare constant must be positive, got {cp}"));
    }
    Ok(cp)
}

fn check_grid(deltas: &[f64], simulations: usize, n: usize) -> Result<()> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d >= 0.0)) {
        return param("delta grid must be non-empty and non-negative");
    }
    if simulations == 0 || n == 0 {
        return param("need at least one simulation and one observation");
    }
    Ok(())
}

/// Simulates `M` samples of size `n` under `theta` and returns, per simulation,
/// the value of `stat` on the sample.
fn simulate_stat<M, S>(model: &M, theta: &[f64], n: usize, simulations: usize, seed: u64, stat: S) -> Result<Vec<f64>>
where
    M: ObservationModel + ?Sized,
    S: Fn(&[f64]) -> f64 + Sync,
{
    map_indices(simulations, Execution::default(), |i| {
        let mut rng = ChainRng::new(replicate_seed(seed, i));
        model.simulate(theta, n, &mut rng).map(|obs| stat(&obs))
    })
    .into_iter()
    .collect()
}

/// Frequency of `|n⁻¹Σf(ξᵢ) − π_θ(f)| ≥ δ` over `M` samples, per `δ`.
///
/// `poincare` overrides the model's Poincare constant.
#[allow(clippy::too_many_arguments)]
pub fn concentration_check<M: ObservationModel + ?Sized>(
    model: &M,
    stat: &LipschitzStatistic<'_>,
    theta: &[f64],
    n: usize,
    deltas: &[f64],
    simulations: usize,
    seed: u64,
    poincare: Option<f64>,
) -> Result<ConcentrationTable> {
    check_grid(deltas, simulations, n)?;
    let cp = resolve_poincare(model, poincare)?;
    let k = model.obs_dim();
    let devs = simulate_stat(model, theta, n, simulations, seed, |obs| {
        let s: f64 = obs.chunks_exact(k).map(|xi| (stat.f)(xi)).sum();
        (s / n as f64 - stat.mean).abs()
    })?;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let hits = devs.iter().filter(|&&v| v >= delta).count();
            BoundCheck::new(delta, hits, simulations, deviation_bound(n, delta, stat.lipschitz, cp))
        })
        .collect();
    Ok(ConcentrationTable {
        n,
        simulations,
        poincare: cp,
        rows,
    })
}

/// Frequency of `|n⁻¹Σ∇_θU(ξᵢ, θ)| ≥ δ` under `θ` against the `2d`-factor bound.
#[allow(clippy::too_many_arguments)]
pub fn gradient_concentration_check<M: ObservationModel + ?Sized>(
    model: &M,
    theta: &[f64],
    lipschitz: f64,
    n: usize,
    deltas: &[f64],
    simulations: usize,
    seed: u64,
    poincare: Option<f64>,
) -> Result<ConcentrationTable> {
    check_grid(deltas, simulations, n)?;
    let cp = resolve_poincare(model, poincare)?;
    let k = model.obs_dim();
    let d = model.param_dim();
    if theta.len() != d {
        return param("theta does not match the model dimension");
    }
    let norms = simulate_stat(model, theta, n, simulations, seed, |obs| {
        let mut g = vec![0.0; d];
        obs.chunks_exact(k).for_each(|xi| model.add_grad(xi, theta, &mut g));
        g.iter().map(|v| (v / n as f64).powi(2)).sum::<f64>().sqrt()
    })?;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let hits = norms.iter().filter(|&&v| v >= delta).count();
            BoundCheck::new(delta, hits, simulations, gradient_deviation_bound(n, delta, lipschitz, cp, d))
        })
        .collect();
    Ok(ConcentrationTable {
        n,
        simulations,
        poincare: cp,
        rows,
    })
}

/// Separation function `c(Δ) = b₁Δ^{α_c}` for `Δ ≤ 1`, `b₂(log Δ + 1)` above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationMap {
    pub b1: f64,
    pub b2: f64,
    pub alpha_c: f64,
}

impl SeparationMap {
    pub fn eval(&self, delta: f64) -> f64 {
        if delta <= 1.0 {
            self.b1 * delta.powf(self.alpha_c)
        } else {
            self.b2 * (delta.ln() + 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub radius: f64,
    /// `c(r_n)/2`; `delta` of both checks.
    pub threshold: f64,
    /// Rejections under `θ★`.
    pub type_i: BoundCheck,
    /// Acceptances under the alternative.
    pub type_ii: BoundCheck,
}

impl TestReport {
    pub fn passed(&self) -> bool {
        self.type_i.passed && self.type_ii.passed
    }
}

/// Error frequencies of the test `1{|n⁻¹ΣΨ(ξᵢ) − π_θ★(Ψ)| ≥ c(r_n)/2}`.
///
/// `psi.mean` is `π_θ★(Ψ)`; `radius` is the separation radius `r_n`.
#[allow(clippy::too_many_arguments)]
pub fn run_test_phi<M: ObservationModel + ?Sized>(
    model: &M,
    psi: &LipschitzStatistic<'_>,
    theta_star: &[f64],
    theta_alt: &[f64],
    n: usize,
    radius: f64,
    c_map: &SeparationMap,
    simulations: usize,
    seed: u64,
    poincare: Option<f64>,
) -> Result<TestReport> {
    if !(psi.lipschitz <= 1.0) {
        return param(format!("the test statistic must be 1-Lipschitz, got {}", psi.lipschitz));
    }
    if !(radius > 0.0) {
        return param("separation radius must be positive");
    }
    let sep = dist(theta_alt, theta_star);
    if sep < radius * (1.0 - 1e-12) {
        return param(format!("alternative at distance {sep} is closer than r_n = {radius}"));
    }
    check_grid(&[0.0], simulations, n)?;
    let cp = resolve_poincare(model, poincare)?;
    let c = c_map.eval(radius);
    let threshold = c / 2.0;
    let bound = test_error_bound(n, c, cp);
    let k = model.obs_dim();
    let dev = |obs: &[f64]| {
        let s: f64 = obs.chunks_exact(k).map(|xi| (psi.f)(xi)).sum();
        (s / n as f64 - psi.mean).abs()
    };
    let null = simulate_stat(model, theta_star, n, simulations, replicate_seed(seed, 0), dev)?;
    let alt = simulate_stat(model, theta_alt, n, simulations, replicate_seed(seed, 1), dev)?;
    let rejections = null.iter().filter(|&&v| v >= threshold).count();
    let acceptances = alt.iter().filter(|&&v| v < threshold).count();
    Ok(TestReport {
        n,
        radius,
        threshold,
        type_i: BoundCheck::new(threshold, rejections, simulations, bound),
        type_ii: BoundCheck::new(threshold, acceptances, simulations, bound),
    })
}
