use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::numeric::ScalarSum;

/// Exact law of the Cesaro average of an Euler chain on `W = (ρ/2)(x − m)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `(1/N) Σ_{j<N} X_j` for the AR(1) recursion
/// `X_{j+1} − m = a (X_j − m) + √(2γ) ζ_{j+1}`, `a = 1 − γρ`.
///
/// Noise `ζ_i` enters every later state, so the average carries it with
/// weight `(1 − a^{N−i})/(N(1 − a))`, giving
/// `Var = 2γ / (N²(1 − a)²) · Σ_{k=1}^{N−1} (1 − a^k)²`.
pub fn ou_cesaro_moments(rho: f64, m: f64, gamma: f64, n: u64, x0: f64) -> Result<OuMoments> {
    if !(rho > 0.0 && gamma > 0.0) {
        return param("rho and gamma must be positive");
    }
    if gamma * rho >= 2.0 {
        return param(format!("gamma * rho = {} makes the AR(1) recursion unstable", gamma * rho));
    }
    if n == 0 {
        return param("N must be at least 1");
    }
    let a = 1.0 - gamma * rho;
    let b = 1.0 - a;
    let nf = n as f64;
    let pow = |k: f64| a.powf(k);
    let mean = m + (x0 - m) * (1.0 - pow(nf)) / (nf * b);
    let sum = if b * nf >= 1.0 {
        (nf - 1.0) - 2.0 * a * (1.0 - pow(nf - 1.0)) / b + a * a * (1.0 - pow(2.0 * (nf - 1.0))) / (1.0 - a * a)
    } else {
        let mut acc = ScalarSum::default();
        let mut ak = 1.0;
        for _ in 1..n {
            ak *= a;
            acc.add((1.0 - ak) * (1.0 - ak));
        }
        acc.value()
    };
    Ok(OuMoments {
        mean,
        variance: 2.0 * gamma * sum / (nf * nf * b * b),
    })
}
