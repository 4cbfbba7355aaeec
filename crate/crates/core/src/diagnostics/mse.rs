use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::potentials::Potential;
use crate::rng::{mix_seed, ChainRng};
use crate::sampler::{replicate_runs_with, replicate_seed, ChainConfig, Execution, ReplicateSummary};
use crate::tuning::TuningPlan;

pub const BOOTSTRAP_RESAMPLES: usize = 2000;
/// Experiments with more diverged replicates than this fraction fail.
pub const MAX_DIVERGED_FRACTION: f64 = 0.1;
const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Quadrature,
    ClosedForm,
    ReferenceChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: Vec<f64>,
    pub provenance: Provenance,
}

impl Reference {
    pub fn new(value: Vec<f64>, provenance: Provenance) -> Self {
        Self { value, provenance }
    }
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub potential: String,
    pub plan: TuningPlan,
    pub x0: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Seed of each replicate, in order.
    pub seeds: Vec<u64>,
    pub bootstrap_seed: u64,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    /// Cesaro estimate; `None` for a diverged replicate.
    pub estimate: Option<Vec<f64>>,
    pub sq_error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ReplicateRecord>,
    pub reference: Reference,
    /// Mean of the squared distances over finished replicates.
    pub mse: f64,
    /// Bootstrap 95% percentile interval of the MSE.
    pub ci: (f64, f64),
    pub diverged: usize,
    pub manifest: ExperimentManifest,
}

/// The report without per-replicate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub reference: Reference,
    pub mse: f64,
    pub ci: (f64, f64),
    pub finished: usize,
    pub diverged: usize,
    pub manifest: ExperimentManifest,
}

impl ExperimentReport {
    pub fn estimates(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().filter_map(|r| r.estimate.as_deref())
    }

    /// Recomputes the MSE from the stored estimates with the same
    /// summation order as the experiment.
    pub fn recompute_mse(&self) -> f64 {
        let sq: Vec<f64> = self.estimates().map(|e| sq_dist(e, &self.reference.value)).collect();
        mean_in_order(&sq)
    }

    pub fn summary(&self) -> ExperimentSummary {
        ExperimentSummary {
            reference: self.reference.clone(),
            mse: self.mse,
            ci: self.ci,
            finished: self.records.len() - self.diverged,
            diverged: self.diverged,
            manifest: self.manifest.clone(),
        }
    }

    /// One row per replicate: index, seed, status, estimate coordinates, squared error.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.reference.value.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replicate".to_string(), "seed".into(), "status".into()];
        header.extend((0..d).map(|j| format!("estimate_{j}")));
        header.push("sq_error".into());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.index.to_string(), r.seed.to_string()];
            match (&r.estimate, r.sq_error) {
                (Some(e), Some(s)) => {
                    row.push("ok".into());
                    row.extend(e.iter().map(|v| format!("{v:.16e}")));
                    row.push(format!("{s:.16e}"));
                }
                _ => {
                    row.push("diverged".into());
                    row.extend(std::iter::repeat_n(String::new(), d + 1));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_in_order(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    if values.is_empty() || resamples == 0 {
        return param("bootstrap needs data and at least one resample");
    }
    if !(0.0 < level && level < 1.0) {
        return param(format!("confidence level must lie in (0, 1), got {level}"));
    }
    let n = values.len();
    let mut rng = ChainRng::new(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.below(n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok((at(tail), at(1.0 - tail)))
}

/// `M` chains run with the plan's `(γ, N)` from `x0`, scored against `reference`.
pub fn mse_experiment<P: Potential + ?Sized>(
    p: &P,
    plan: &TuningPlan,
    x0: &[f64],
    replicates: usize,
    reference: &Reference,
    base_seed: u64,
) -> Result<ExperimentReport> {
    mse_experiment_with(p, plan, x0, replicates, reference, base_seed, Execution::default())
}

pub fn mse_experiment_with<P: Potential + ?Sized>(
    p: &P,
    plan: &TuningPlan,
    x0: &[f64],
    replicates: usize,
    reference: &Reference,
    base_seed: u64,
    execution: Execution,
) -> Result<ExperimentReport> {
    if reference.value.len() != p.dim() || x0.len() != p.dim() {
        return param("reference and x0 must match the potential dimension");
    }
    let n_steps = usize::try_from(plan.n_steps).map_err(|_| Error::Parameter("N does not fit in usize".into()))?;
    let cfg = ChainConfig::new(plan.gamma, n_steps, x0.to_vec(), base_seed);
    let runs = replicate_runs_with(p, &cfg, replicates, base_seed, execution)?;
    let summary = ReplicateSummary::of(&runs);
    if summary.diverged_fraction() > MAX_DIVERGED_FRACTION {
        return Err(Error::Experiment(format!(
            "{} of {} replicates diverged; first failure: {}",
            summary.diverged,
            summary.total,
            summary.first_failure.unwrap_or_default()
        )));
    }
    let records: Vec<ReplicateRecord> = runs
        .into_iter()
        .enumerate()
        .map(|(index, run)| {
            let seed = replicate_seed(base_seed, index);
            match run {
                Ok(run) => ReplicateRecord {
                    index,
                    seed,
                    sq_error: Some(sq_dist(&run.cesaro, &reference.value)),
                    estimate: Some(run.cesaro),
                    failure: None,
                },
                Err(e) => ReplicateRecord {
                    index,
                    seed,
                    estimate: None,
                    sq_error: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let sq: Vec<f64> = records.iter().filter_map(|r| r.sq_error).collect();
    let bootstrap_seed = mix_seed(base_seed, BOOTSTRAP_STREAM);
    let ci = bootstrap_mean_ci(&sq, BOOTSTRAP_RESAMPLES, 0.95, bootstrap_seed)?;
    Ok(ExperimentReport {
        mse: mean_in_order(&sq),
        ci,
        diverged: summary.diverged,
        reference: reference.clone(),
        manifest: ExperimentManifest {
            potential: p.describe(),
            plan: plan.clone(),
            x0: x0.to_vec(),
            replicates,
            base_seed,
            seeds: records.iter().map(|r| r.seed).collect(),
            bootstrap_seed,
            config_hash: None,
        },
        records,
    })
}

/// Reruns the experiment a manifest describes.
pub fn replay<P: Potential + ?Sized>(p: &P, manifest: &ExperimentManifest, reference: &Reference) -> Result<ExperimentReport> {
    if p.describe() != manifest.potential {
        return param(format!("manifest was recorded for {}, not {}", manifest.potential, p.describe()));
    }
    let mut report = mse_experiment(p, &manifest.plan, &manifest.x0, manifest.replicates, reference, manifest.base_seed)?;
    report.manifest.config_hash = manifest.config_hash.clone();
    Ok(report)
}
