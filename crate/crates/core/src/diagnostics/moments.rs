use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::ScalarSum;
use crate::potentials::{normalization_anchor, ConvexityProfile, Potential};
use crate::sampler::{run_chain_observed, ChainConfig, LogRecord};
use crate::tuning::compute_upsilon;

/// A checkpoint running mean above this multiple of the first-decile
/// maximum counts as a blow-up.
pub const EXCESS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub label: String,
    /// `p` for `W^p`, `a` for `e^{aW}`.
    pub exponent: f64,
    pub exponential: bool,
    /// Largest running mean over checkpoints.
    pub sup_mean: f64,
    pub first_decile_max: f64,
    /// `W^p(x0) + Υ^p` (polynomial rows only).
    pub envelope: Option<f64>,
    /// `sup_mean / envelope`.
    pub implied_constant: Option<f64>,
    pub checkpoints: Vec<LogRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub gamma: f64,
    pub n_steps: usize,
    pub upsilon: f64,
    pub offset: f64,
    pub rows: Vec<MomentRow>,
}

/// Running means of `W^p(X_k)` and `e^{aW(X_k)}` along one chain, with `W`
/// normalized by its offset.
///
/// Fails with a divergence error at the first checkpoint whose running mean
/// exceeds `EXCESS_FACTOR` times the largest one in the first decile.
/// `upsilon` defaults to the formula bound for KL profiles and 1 otherwise.
pub fn moment_check<P: Potential + ?Sized>(
    p: &P,
    config: &ChainConfig,
    p_grid: &[f64],
    a: f64,
    upsilon: Option<f64>,
) -> Result<MomentReport> {
    let d = p.dim();
    let lip = p.smoothness().lipschitz;
    let ceiling = 1.0 / (4.0 * d as f64 * lip + 1.0);
    if config.gamma > ceiling * (1.0 + 1e-12) {
        return param(format!("moment check needs gamma <= 1/(4dL+1) = {ceiling:e}, got {:e}", config.gamma));
    }
    if p_grid.iter().any(|q| !(0.0..=9.0).contains(q)) {
        return param("moment exponents must lie in [0, 9]");
    }
    if !(a > 0.0 && a <= 1.0 / 16.0) {
        return param(format!("exponential moment exponent must lie in (0, 1/16], got {a}"));
    }
    let upsilon = match (upsilon, p.profile()) {
        (Some(u), _) => u,
        (None, profile @ ConvexityProfile::WeaklyConvexKl { .. }) => compute_upsilon(profile, lip, d, 1.0)?.value,
        (None, _) => 1.0,
    };
    let (_, offset) = normalization_anchor(p)?;
    let w0 = p.value(&config.x0) + offset;

    let n = config.n_steps;
    let stride = config.log_stride.unwrap_or(n.div_ceil(1000)).max(1);
    let cols = p_grid.len() + 1;
    let mut sums = vec![ScalarSum::default(); cols];
    let mut logs: Vec<Vec<LogRecord>> = vec![Vec::with_capacity(n / stride + 1); cols];
    let run = run_chain_observed(p, config, &mut |k, _x, w| {
        let wn = (w + offset).max(0.0);
        for (s, q) in sums.iter_mut().zip(p_grid) {
            s.add(wn.powf(*q));
        }
        sums[cols - 1].add((a * wn).exp());
        if (k + 1) % stride == 0 || k + 1 == n {
            let t = config.gamma * (k + 1) as f64;
            for (log, s) in logs.iter_mut().zip(&sums) {
                log.push(LogRecord {
                    t,
                    value: s.value() / (k + 1) as f64,
                });
            }
        }
    })?;

    let mut rows = Vec::with_capacity(cols);
    for (c, log) in logs.into_iter().enumerate() {
        let exponential = c == cols - 1;
        let exponent = if exponential { a } else { p_grid[c] };
        let decile = log.len().div_ceil(10).max(1);
        let first_decile_max = log[..decile].iter().map(|r| r.value).fold(0.0, f64::max);
        let label = if exponential { format!("exp({a}W)") } else { format!("W^{exponent}") };
        if let Some(bad) = log.iter().find(|r| !(r.value <= EXCESS_FACTOR * first_decile_max)) {
            return Err(Error::Divergence {
                step: (bad.t / config.gamma).round() as usize,
                reason: format!(
                    "running mean of {label} reached {:e}, above {EXCESS_FACTOR} x first-decile max {:e}",
                    bad.value, first_decile_max
                ),
                partial: Box::new(run),
            });
        }
        let sup_mean = log.iter().map(|r| r.value).fold(0.0, f64::max);
        let envelope = (!exponential).then(|| w0.max(0.0).powf(exponent) + upsilon.powf(exponent));
        rows.push(MomentRow {
            label,
            exponent,
            exponential,
            sup_mean,
            first_decile_max,
            envelope,
            implied_constant: envelope.map(|e| sup_mean / e),
            checkpoints: log,
        });
    }
    Ok(MomentReport {
        gamma: config.gamma,
        n_steps: n,
        upsilon,
        offset,
        rows,
    })
}
