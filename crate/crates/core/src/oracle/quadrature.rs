use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::potentials::{dense_hessian, find_minimizer, Potential};

/// Tensor trapezoid grid centered at the Laplace mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Vec<f64>>,
    pub log_weights: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub mean: Vec<f64>,
    /// Half-resolution difference plus truncation sensitivity, max norm.
    pub error_estimate: f64,
    /// `∫ e^{−(W − W(mode))}`.
    pub mass: f64,
    pub grid: QuadratureGrid,
}

const MIN_K_SIGMA: f64 = 8.0;
const MAX_DIM: usize = 3;
/// Relative mass gained between `0.75·k` and `k` standard deviations above
/// which the tail is declared non-normalizable at this coverage.
const TAIL_GROWTH_LIMIT: f64 = 1e-2;

struct Sums {
    mass: f64,
    first: Vec<f64>,
}

impl Sums {
    fn new(d: usize) -> Self {
        Self {
            mass: 0.0,
            first: vec![0.0; d],
        }
    }

    fn mean(&self) -> Vec<f64> {
        self.first.iter().map(|v| v / self.mass).collect()
    }
}

/// Posterior mean `∫θ e^{−W} / ∫e^{−W}` by tensor trapezoid quadrature over
/// `mode ± k_sigma·σ_i`, with `σ_i² = (∇²W(mode)⁻¹)_{ii}`.
pub fn quadrature_posterior_mean<P: Potential + ?Sized>(p: &P, nodes_per_axis: usize, k_sigma: f64) -> Result<QuadratureResult> {
    let d = p.dim();
    if d > MAX_DIM {
        return Err(Error::Capability(format!("quadrature is limited to d <= {MAX_DIM}, got d = {d}")));
    }
    if !(k_sigma >= MIN_K_SIGMA) {
        return param(format!("coverage must be at least {MIN_K_SIGMA} standard deviations, got {k_sigma}"));
    }
    if nodes_per_axis < 5 {
        return param("need at least 5 nodes per axis");
    }
    let n = nodes_per_axis | 1;
    let start = p.minimizer_hint().map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
    let mode = find_minimizer(p, &start, 1e-11)?;
    let w_mode = p.value(&mode);
    let h = dense_hessian(p, &mode);
    let cov = h
        .try_inverse()
        .ok_or_else(|| Error::Numeric {
            message: "Hessian at the mode is singular".into(),
            iterations: 0,
            best: Some(mode.clone()),
        })?;
    let sigma: Vec<f64> = (0..d).map(|i| cov[(i, i)].sqrt()).collect();
    let half: Vec<f64> = sigma.iter().map(|s| k_sigma * s).collect();

    let nodes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..n)
                .map(|j| mode[i] - half[i] + 2.0 * half[i] * j as f64 / (n - 1) as f64)
                .collect()
        })
        .collect();
    let trap = |j: usize, m: usize| if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
    let spacing: Vec<f64> = half.iter().map(|hw| 2.0 * hw / (n - 1) as f64).collect();
    let log_weights: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..n).map(|j| (spacing[i] * trap(j, n)).ln()).collect())
        .collect();

    let mut full = Sums::new(d);
    let mut coarse = Sums::new(d);
    let mut inner = Sums::new(d);
    let inner_bound = 0.75 * k_sigma;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let total = n.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..d {
            idx[i] = rem % n;
            rem /= n;
            x[i] = nodes[i][idx[i]];
        }
        let e = (w_mode - p.value(&x)).exp();
        if !e.is_finite() {
            return Err(Error::Numeric {
                message: format!("integrand is not finite at {x:?}"),
                iterations: flat,
                best: None,
            });
        }
        let wf: f64 = (0..d).map(|i| spacing[i] * trap(idx[i], n)).product();
        full.mass += wf * e;
        for (f, xi) in full.first.iter_mut().zip(&x) {
            *f += wf * e * xi;
        }
        if idx.iter().all(|j| j % 2 == 0) {
            let wc: f64 = (0..d).map(|i| 2.0 * spacing[i] * trap(idx[i] / 2, n.div_ceil(2))).product();
            coarse.mass += wc * e;
            for (f, xi) in coarse.first.iter_mut().zip(&x) {
                *f += wc * e * xi;
            }
        }
        if (0..d).all(|i| (x[i] - mode[i]).abs() <= inner_bound * sigma[i] + 1e-12 * sigma[i]) {
            let wi: f64 = spacing.iter().product();
            inner.mass += wi * e;
            for (f, xi) in inner.first.iter_mut().zip(&x) {
                *f += wi * e * xi;
            }
        }
    }
    if !(full.mass > 0.0 && full.mass.is_finite()) {
        return Err(Error::Numeric {
            message: format!("quadrature mass {} is not positive and finite", full.mass),
            iterations: total,
            best: None,
        });
    }
    let growth = (full.mass - inner.mass).abs() / full.mass;
    if growth > TAIL_GROWTH_LIMIT {
        return Err(Error::Numeric {
            message: format!("mass grows by a fraction {growth:e} from {inner_bound} to {k_sigma} standard deviations"),
            iterations: total,
            best: Some(full.mean()),
        });
    }
    let mean = full.mean();
    let max_diff = |other: &Sums| {
        mean.iter()
            .zip(other.mean())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let error_estimate = max_diff(&coarse) + max_diff(&inner);
    Ok(QuadratureResult {
        mean,
        error_estimate,
        mass: full.mass,
        grid: QuadratureGrid {
            nodes,
            log_weights,
            center: mode,
            half_widths: half,
        },
    })
}
