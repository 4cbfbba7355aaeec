//! Ground-truth computations used to check the sampler and the tunings.

mod ou;
mod poisson;
mod quadrature;
mod reference;

pub use ou::{ou_cesaro_moments, OuMoments};
pub use poisson::{gauss_legendre, poisson_solve_1d, poisson_truncation_bias, PoissonGrid, PoissonSolution1D};
pub use quadrature::{quadrature_posterior_mean, QuadratureGrid, QuadratureResult};
pub use reference::{reference_chain, ReferenceEstimate, REFERENCE_REPLICATES};

use serde::{Deserialize, Serialize};

/// Exported oracle value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub target: String,
    pub value: serde_json::Value,
    pub error_estimate: f64,
    pub method: String,
    pub settings: serde_json::Value,
}
