//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use cesaro_lmc::bayes::PriorSpec;
use cesaro_lmc::potentials::ConvexityProfile;
use cesaro_lmc::tuning::Regime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub data: Option<DataBlock>,
    #[serde(default)]
    pub tuning: Option<TuningBlock>,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianLocation,
    PPower,
    Logistic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub family: Family,
    pub d: usize,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub alpha_c: f64,
    #[serde(default = "one")]
    pub b1: f64,
    #[serde(default = "one")]
    pub b2: f64,
    /// Replaces the model's Poincare constant.
    #[serde(default)]
    pub poincare: Option<f64>,
    /// Replaces the declared curvature profile of the target.
    #[serde(default)]
    pub profile_override: Option<ConvexityProfile>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub precision: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub ridge: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub design: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub labels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    /// Defaults to a stream derived from the base seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningBlock {
    pub regime: Regime,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub frak_e: Option<f64>,
    #[serde(default)]
    pub calib: Option<f64>,
    #[serde(default)]
    pub c_r: Option<f64>,
    #[serde(default)]
    pub upsilon: Option<f64>,
    #[serde(default)]
    pub initial_certified: bool,
    /// Step of a `fixed` plan.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Iteration count of a `fixed` plan.
    #[serde(default)]
    pub n_steps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Mse,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    ClosedForm,
    Quadrature,
    ReferenceChain,
}

fn default_replicates() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default)]
    pub experiment: ExperimentKind,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub reference: Option<ReferenceKind>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::default(),
            replicates: default_replicates(),
            base_seed: None,
            output: None,
            x0: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormChoice {
    AsPrinted,
    #[default]
    Corrected,
}

fn default_probes() -> usize {
    1000
}
fn default_radius() -> f64 {
    10.0
}
fn default_deltas() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3, 0.5]
}
fn default_simulations() -> usize {
    2000
}
fn default_concentration_n() -> usize {
    100
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub bound_form: BoundFormChoice,
    #[serde(default = "yes")]
    pub concentration: bool,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_simulations")]
    pub simulations: usize,
    #[serde(default = "default_concentration_n")]
    pub concentration_n: usize,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            probes: default_probes(),
            radius: default_radius(),
            bound_form: BoundFormChoice::default(),
            concentration: true,
            deltas: default_deltas(),
            simulations: default_simulations(),
            concentration_n: default_concentration_n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Quadrature,
    Poisson,
    Ou,
    ReferenceChain,
}

fn default_nodes() -> usize {
    81
}
fn default_eps_ref() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub kind: OracleKind,
    #[serde(default = "default_nodes")]
    pub nodes_per_axis: usize,
    #[serde(default = "default_radius")]
    pub k_sigma: f64,
    #[serde(default = "default_eps_ref")]
    pub eps_ref: f64,
}

/// A parsed configuration with command-line overrides applied.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub hash: String,
    /// Canonical JSON the hash is computed from.
    pub canonical: serde_json::Value,
}

pub fn load(path: &Path, seed_flag: Option<u64>) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed_flag {
        config.run.base_seed = Some(s);
    }
    let seed = config
        .run
        .base_seed
        .ok_or_else(|| CliError::Config("an explicit seed is required: set run.base_seed or pass --seed".into()))?;
    let (hash, canonical) = config_hash(&config)?;
    Ok(Loaded {
        config,
        seed,
        hash,
        canonical,
    })
}

/// First 16 hex digits of the SHA-256 of the compact JSON with sorted keys.
/// The output directory does not enter the hash.
pub fn config_hash(config: &ExperimentConfig) -> Result<(String, serde_json::Value), CliError> {
    let mut c = config.clone();
    c.run.output = None;
    let value = serde_json::to_value(&c)?;
    let text = serde_json::to_string(&value)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok((hex::encode(digest)[..16].to_string(), value))
}
