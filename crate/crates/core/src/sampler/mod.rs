//! Constant-step Euler–Maruyama chains with Cesaro averaging.

mod replicate;
mod trajectory;

pub(crate) use replicate::map_indices;
pub use replicate::{replicate_runs, replicate_runs_with, replicate_seed, Execution, ReplicateSummary};
pub use trajectory::{read_trajectory, run_chain_dumped, TrajectoryHeader};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::{CompensatedSum, ScalarSum};
use crate::potentials::Potential;
use crate::rng::ChainRng;

/// Any coordinate beyond this magnitude is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Default number of log records per run when no stride is given.
const DEFAULT_LOG_RECORDS: usize = 1000;

/// Moment-bound step ceiling `1/(4dL + 1)`.
pub fn moment_step_ceiling(d: usize, lipschitz: f64) -> f64 {
    1.0 / (4.0 * d as f64 * lipschitz + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub gamma: f64,
    pub n_steps: usize,
    pub x0: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub track_tangent: bool,
    /// Exponent `a` of the tracked running mean of `e^{aW}`.
    #[serde(default)]
    pub track_moments: Option<f64>,
    /// Substeps per coarse step for the fine-step diffusion reference.
    #[serde(default)]
    pub fine_substeps: Option<usize>,
    /// Steps discarded before averaging starts.
    #[serde(default)]
    pub burn_in: usize,
    /// Reject steps above `1/(4dL + 1)`.
    #[serde(default)]
    pub clamp: bool,
    /// Coarse steps between log records; defaults to about 1000 records per run.
    #[serde(default)]
    pub log_stride: Option<usize>,
}

impl ChainConfig {
    pub fn new(gamma: f64, n_steps: usize, x0: Vec<f64>, seed: u64) -> Self {
        Self {
            gamma,
            n_steps,
            x0,
            seed,
            track_tangent: false,
            track_moments: None,
            fine_substeps: None,
            burn_in: 0,
            clamp: false,
            log_stride: None,
        }
    }

    pub fn with_tangent(mut self) -> Self {
        self.track_tangent = true;
        self
    }

    pub fn with_moments(mut self, a: f64) -> Self {
        self.track_moments = Some(a);
        self
    }

    pub fn with_fine_substeps(mut self, k: usize) -> Self {
        self.fine_substeps = Some(k);
        self
    }

    pub fn with_burn_in(mut self, steps: usize) -> Self {
        self.burn_in = steps;
        self
    }

    pub fn with_clamp(mut self) -> Self {
        self.clamp = true;
        self
    }

    pub fn with_log_stride(mut self, stride: usize) -> Self {
        self.log_stride = Some(stride);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, d: usize, lipschitz: f64) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return param(format!("step size must be positive, got {}", self.gamma));
        }
        if self.n_steps == 0 {
            return param("number of steps must be at least 1");
        }
        if self.x0.len() != d {
            return param(format!("initial point has length {} but dimension is {d}", self.x0.len()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return param("initial point is not finite");
        }
        if let Some(a) = self.track_moments {
            if !(a > 0.0 && a <= 1.0 / 16.0) {
                return param(format!("moment exponent must lie in (0, 1/16], got {a}"));
            }
        }
        if self.fine_substeps == Some(0) {
            return param("fine substeps must be at least 1");
        }
        if self.log_stride == Some(0) {
            return param("log stride must be at least 1");
        }
        if self.clamp {
            let ceiling = moment_step_ceiling(d, lipschitz);
            if self.gamma > ceiling {
                return param(format!("step {} exceeds the ceiling 1/(4dL+1) = {ceiling}", self.gamma));
            }
        }
        Ok(())
    }

    fn stride(&self) -> usize {
        self.log_stride
            .unwrap_or_else(|| self.n_steps.div_ceil(DEFAULT_LOG_RECORDS).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub value: f64,
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    /// `(1/N) Σ_{j<N} X_j`, including `x0` and excluding `X_N`.
    pub cesaro: Vec<f64>,
    pub final_state: Vec<f64>,
    /// `(t, ‖Y_t‖)` with `Y` the first variation of the flow, spectral norm.
    pub tangent_log: Option<Vec<LogRecord>>,
    /// `(t, running mean of e^{a W(X_t)})` with `W` normalized by its offset.
    pub moment_log: Option<Vec<LogRecord>>,
    pub steps_done: usize,
    pub seed: u64,
}

/// One Euler–Maruyama step `x − γ∇W(x) + √(2γ)·z`.
pub fn euler_step<P: Potential + ?Sized>(p: &P, state: &[f64], gamma: f64, noise: &[f64]) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return param(format!("step size must be positive, got {gamma}"));
    }
    let d = p.dim();
    if state.len() != d || noise.len() != d {
        return param("state and noise must match the potential dimension");
    }
    let mut g = vec![0.0; d];
    p.grad_into(state, &mut g);
    let s = (2.0 * gamma).sqrt();
    let out: Vec<f64> = state
        .iter()
        .zip(&g)
        .zip(noise)
        .map(|((x, gi), z)| x - gamma * gi + s * z)
        .collect();
    if out.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
        return Err(Error::Divergence {
            step: 0,
            reason: "non-finite or unbounded state after one step".into(),
            partial: Box::new(ChainRun {
                cesaro: state.to_vec(),
                final_state: out,
                tangent_log: None,
                moment_log: None,
                steps_done: 0,
                seed: 0,
            }),
        });
    }
    Ok(out)
}

/// Runs `N` Euler steps from `x0` and returns the Cesaro average.
pub fn run_chain<P: Potential + ?Sized>(p: &P, config: &ChainConfig) -> Result<ChainRun> {
    simulate(p, config, 1, &mut |_, _, _| {})
}

/// Like [`run_chain`], with the observer called on every averaged state
/// as `(k, X_k, W(X_k))` for `k = 0..N`.
pub fn run_chain_observed<P, F>(p: &P, config: &ChainConfig, observer: &mut F) -> Result<ChainRun>
where
    P: Potential + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    simulate(p, config, 1, observer)
}

/// Fine-step reference of the diffusion: each coarse step of length `γ` is
/// split into `K` Euler substeps of length `γ/K`; the average is taken on
/// the coarse grid. `K = 1` reproduces [`run_chain`] bit for bit.
pub fn run_diffusion_fine<P: Potential + ?Sized>(p: &P, config: &ChainConfig) -> Result<ChainRun> {
    let k = config
        .fine_substeps
        .ok_or_else(|| Error::Parameter("fine-step run needs fine_substeps".into()))?;
    simulate(p, config, k, &mut |_, _, _| {})
}

fn spectral_norm(y: &[f64], d: usize) -> f64 {
    DMatrix::from_column_slice(d, d, y)
        .singular_values()
        .max()
}

struct Divergence {
    step: usize,
    reason: String,
}

fn check_state(x: &[f64], w: f64, step: usize) -> std::result::Result<(), Divergence> {
    if !w.is_finite() {
        return Err(Divergence {
            step,
            reason: format!("potential value {w} is not finite"),
        });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
        return Err(Divergence {
            step,
            reason: format!("coordinate {v} exceeds the divergence bound"),
        });
    }
    Ok(())
}

fn simulate<P, F>(p: &P, cfg: &ChainConfig, substeps: usize, observer: &mut F) -> Result<ChainRun>
where
    P: Potential + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    let d = p.dim();
    cfg.validate(d, p.smoothness().lipschitz)?;
    if substeps == 0 {
        return param("fine substeps must be at least 1");
    }
    let h = cfg.gamma / substeps as f64;
    let noise_scale = (2.0 * h).sqrt();
    let offset = p.offset().unwrap_or(0.0);
    let stride = cfg.stride();

    let mut rng = ChainRng::new(cfg.seed);
    let mut x = cfg.x0.clone();
    let mut g = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut acc = CompensatedSum::new(d);

    let mut tangent = cfg.track_tangent.then(|| {
        let mut y = vec![0.0; d * d];
        for i in 0..d {
            y[i * d + i] = 1.0;
        }
        y
    });
    let mut hy = vec![0.0; d];
    let mut tangent_log = cfg.track_tangent.then(Vec::new);

    let moment_a = cfg.track_moments;
    let mut moment_sum = ScalarSum::default();
    let mut moment_log = moment_a.map(|_| Vec::new());

    let total_coarse = cfg.burn_in + cfg.n_steps;
    let mut failure = None;

    'outer: for step in 0..total_coarse {
        let averaged = step >= cfg.burn_in;
        let k = step.wrapping_sub(cfg.burn_in);
        for sub in 0..substeps {
            let w = p.value_grad_into(&x, &mut g);
            if let Err(e) = check_state(&x, w, step) {
                failure = Some(e);
                break 'outer;
            }
            if sub == 0 && averaged {
                acc.add(&x);
                observer(k, &x, w);
                let t = k as f64 * cfg.gamma;
                if let (Some(a), Some(log)) = (moment_a, moment_log.as_mut()) {
                    moment_sum.add((a * (w + offset)).exp());
                    if k % stride == 0 {
                        log.push(LogRecord {
                            t,
                            value: moment_sum.value() / (k + 1) as f64,
                        });
                    }
                }
                if let (Some(y), Some(log)) = (tangent.as_ref(), tangent_log.as_mut()) {
                    if k % stride == 0 {
                        log.push(LogRecord {
                            t,
                            value: spectral_norm(y, d),
                        });
                    }
                }
            }
            if let Some(y) = tangent.as_mut() {
                for col in y.chunks_exact_mut(d) {
                    p.hess_vec_into(&x, col, &mut hy);
                    for (c, v) in col.iter_mut().zip(&hy) {
                        *c -= h * v;
                    }
                }
            }
            rng.fill_normal(&mut z);
            for ((xi, gi), zi) in x.iter_mut().zip(&g).zip(&z) {
                *xi += -h * gi + noise_scale * zi;
            }
        }
    }

    if failure.is_none() {
        let w = p.value(&x);
        if let Err(e) = check_state(&x, w, total_coarse) {
            failure = Some(e);
        }
    }
    let steps_done = acc.count();
    if let (Some(y), Some(log)) = (tangent.as_ref(), tangent_log.as_mut()) {
        if failure.is_none() && steps_done.is_multiple_of(stride) {
            log.push(LogRecord {
                t: steps_done as f64 * cfg.gamma,
                value: spectral_norm(y, d),
            });
        }
    }
    let run = ChainRun {
        cesaro: if steps_done == 0 { cfg.x0.clone() } else { acc.mean() },
        final_state: x,
        tangent_log,
        moment_log,
        steps_done,
        seed: cfg.seed,
    };
    match failure {
        None => Ok(run),
        Some(Divergence { step, reason }) => Err(Error::Divergence {
            step,
            reason,
            partial: Box::new(run),
        }),
    }
}
