use super::{run_chain, ChainConfig, ChainRun};
use crate::error::{param, Error, Result};
use crate::potentials::Potential;
use crate::rng::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Work-stealing over the current rayon pool. Falls back to sequential
    /// execution when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

/// Seed of replicate `index` under `base_seed`.
pub fn replicate_seed(base_seed: u64, index: usize) -> u64 {
    mix_seed(base_seed, index as u64)
}

/// Counts of an ensemble of replicate outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub total: usize,
    pub diverged: usize,
    pub first_failure: Option<String>,
}

impl ReplicateSummary {
    pub fn of(results: &[Result<ChainRun>]) -> Self {
        let diverged = results.iter().filter(|r| r.is_err()).count();
        let first_failure = results.iter().find_map(|r| r.as_ref().err().map(Error::to_string));
        Self {
            total: results.len(),
            diverged,
            first_failure,
        }
    }

    pub fn diverged_fraction(&self) -> f64 {
        self.diverged as f64 / self.total.max(1) as f64
    }
}

/// `M` independent chains; replicate `i` uses `replicate_seed(base_seed, i)`.
/// Per-replicate failures are returned in place.
pub fn replicate_runs<P: Potential + ?Sized>(
    p: &P,
    config: &ChainConfig,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<Result<ChainRun>>> {
    replicate_runs_with(p, config, replicates, base_seed, Execution::default())
}

pub fn replicate_runs_with<P: Potential + ?Sized>(
    p: &P,
    config: &ChainConfig,
    replicates: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<Result<ChainRun>>> {
    if replicates == 0 {
        return param("replicate count must be at least 1");
    }
    config.validate(p.dim(), p.smoothness().lipschitz)?;
    let one = |i: usize| {
        let cfg = config.clone().with_seed(replicate_seed(base_seed, i));
        match cfg.fine_substeps {
            Some(_) => super::run_diffusion_fine(p, &cfg),
            None => run_chain(p, &cfg),
        }
    };
    Ok(map_indices(replicates, execution, one))
}

/// `(0..n).map(f)` under the requested execution; output order is by index.
pub(crate) fn map_indices<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, execution: Execution, f: F) -> Vec<T> {
    match execution {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}
