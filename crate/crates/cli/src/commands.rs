//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cesaro_lmc::bayes::ObservationModel;
use cesaro_lmc::diagnostics::{
    bayes_rate_experiment, concentration_check, gradient_concentration_check, mse_experiment, LipschitzStatistic,
    PosteriorMeanMethod, Provenance, RateReport, Reference,
};
use cesaro_lmc::oracle::{
    ou_cesaro_moments, poisson_solve_1d, quadrature_posterior_mean, reference_chain, OracleRecord, PoissonGrid,
};
use cesaro_lmc::potentials::{
    check_convexity_profile, check_gradient_fd, check_lipschitz, find_minimizer, verify_grad_bounds, verify_kl_profile,
    BoundForm, ConvexityProfile, Potential, ProfileReport,
};
use cesaro_lmc::rng::mix_seed;
use cesaro_lmc::tuning::{
    tune_bayes, tune_sc, tune_weak, BayesInputs, Regime, ScVariant, TuningInputs, TuningPlan, WeakVariant,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{
    BoundFormChoice, ExperimentKind, Family, Loaded, OracleBlock, OracleKind, ReferenceKind, TuningBlock,
};
use crate::error::CliError;
use crate::model::{build_target, required, theta_star, Target};

/// Seed streams under the base seed.
const REFERENCE_STREAM: u64 = 0x7ef;
const VERIFY_STREAM: u64 = 0x5e7;

type CliResult<T> = Result<T, CliError>;

/// Writes pretty JSON to stdout; a closed pipe is not an error.
fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn output_dir(loaded: &Loaded, flag: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = flag
        .or_else(|| loaded.config.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Starting point: `run.x0`, else the minimizer of the target.
fn start_point(loaded: &Loaded, target: &Target) -> CliResult<Vec<f64>> {
    let d = target.potential.dim();
    match &loaded.config.run.x0 {
        Some(x0) if x0.len() != d => Err(CliError::Config(format!("run.x0 has length {}, expected {d}", x0.len()))),
        Some(x0) => Ok(x0.clone()),
        None => match target.potential.minimizer_hint() {
            Some(h) => Ok(h.to_vec()),
            None => Ok(find_minimizer(&*target.potential, &vec![0.0; d], 1e-10)?),
        },
    }
}

fn weak_variant(regime: Regime) -> Option<WeakVariant> {
    match regime {
        Regime::WeakIa => Some(WeakVariant::Ia),
        Regime::WeakIb => Some(WeakVariant::Ib),
        Regime::WeakIIa => Some(WeakVariant::IIa),
        Regime::WeakIIb => Some(WeakVariant::IIb),
        _ => None,
    }
}

fn is_bayes(regime: Regime) -> bool {
    matches!(
        regime,
        Regime::BayesWeakI | Regime::BayesWeakII | Regime::BayesWeakIII | Regime::BayesScIa | Regime::BayesScIb
    )
}

fn bayes_inputs(loaded: &Loaded, target: &Target, block: &TuningBlock) -> CliResult<BayesInputs> {
    let cfg = &loaded.config;
    let n = required(cfg.data.as_ref().and_then(|d| d.n), "data.n")?;
    let profile = cfg.model.profile_override.unwrap_or_else(|| target.model.profile());
    let mut inputs = BayesInputs::new(profile, target.model.observation_lipschitz(), cfg.model.d, n);
    inputs.alpha_c = cfg.model.alpha_c;
    inputs.b1 = cfg.model.b1;
    inputs.poincare = cfg
        .model
        .poincare
        .or_else(|| target.model.poincare_constant())
        .unwrap_or(1.0);
    inputs.calib = block.calib.unwrap_or(1.0);
    inputs.initial_certified = block.initial_certified;
    Ok(inputs)
}

fn plan_for_eps(target: &Target, block: &TuningBlock, x0: &[f64], eps: f64) -> CliResult<TuningPlan> {
    let mut inputs = TuningInputs::from_potential(&*target.potential, x0, eps)?;
    if let Some(v) = block.frak_e {
        inputs.frak_e = v;
    }
    if let Some(v) = block.calib {
        inputs.calib = v;
    }
    if let Some(v) = block.c_r {
        inputs.c_r = v;
    }
    inputs.upsilon = block.upsilon;
    let plan = match block.regime {
        Regime::ScI => tune_sc(&inputs, ScVariant::I)?,
        Regime::ScII => tune_sc(&inputs, ScVariant::II)?,
        r => tune_weak(&inputs, weak_variant(r).expect("non-Bayes, non-SC regimes are weak"))?,
    };
    Ok(plan)
}

/// All plans the tuning block describes: one per entry of `eps_grid`, or a
/// single plan.
fn plans(loaded: &Loaded, target: &Target, x0: &[f64]) -> CliResult<Vec<TuningPlan>> {
    let block = required(loaded.config.tuning.as_ref(), "tuning")?;
    match block.regime {
        Regime::Fixed => Ok(vec![TuningPlan::fixed(
            required(block.gamma, "tuning.gamma")?,
            required(block.n_steps, "tuning.n_steps")?,
        )?]),
        r if is_bayes(r) => {
            if block.eps_grid.is_some() || block.eps.is_some() {
                return Err(CliError::Config("posterior regimes derive eps from n; remove tuning.eps".into()));
            }
            Ok(vec![tune_bayes(&bayes_inputs(loaded, target, block)?, r)?])
        }
        _ => match (&block.eps_grid, block.eps) {
            (Some(grid), _) => grid.iter().map(|&e| plan_for_eps(target, block, x0, e)).collect(),
            (None, Some(e)) => Ok(vec![plan_for_eps(target, block, x0, e)?]),
            (None, None) => Err(CliError::Config("missing required key `tuning.eps`".into())),
        },
    }
}

pub fn tune(loaded: &Loaded) -> CliResult<()> {
    let target = build_target(&loaded.config, loaded.seed)?;
    let x0 = start_point(loaded, &target)?;
    let plans = plans(loaded, &target, &x0)?;
    match (loaded.config.tuning.as_ref().and_then(|t| t.eps_grid.as_ref()), plans.as_slice()) {
        (None, [plan]) => print_json(plan),
        _ => print_json(&plans),
    }
}

fn reference(loaded: &Loaded, target: &Target) -> CliResult<Reference> {
    let oracle = loaded.config.oracle.clone().unwrap_or(OracleBlock {
        kind: OracleKind::Quadrature,
        nodes_per_axis: 81,
        k_sigma: 10.0,
        eps_ref: 0.05,
    });
    let kind = loaded.config.run.reference.unwrap_or(if target.closed_form_mean.is_some() {
        ReferenceKind::ClosedForm
    } else if target.potential.dim() <= 3 {
        ReferenceKind::Quadrature
    } else {
        ReferenceKind::ReferenceChain
    });
    Ok(match kind {
        ReferenceKind::ClosedForm => Reference::new(
            target
                .closed_form_mean
                .clone()
                .ok_or_else(|| CliError::Config("no closed-form mean for this target".into()))?,
            Provenance::ClosedForm,
        ),
        ReferenceKind::Quadrature => Reference::new(
            quadrature_posterior_mean(&*target.potential, oracle.nodes_per_axis, oracle.k_sigma)?.mean,
            Provenance::Quadrature,
        ),
        ReferenceKind::ReferenceChain => Reference::new(
            reference_chain(&*target.potential, oracle.eps_ref, mix_seed(loaded.seed, REFERENCE_STREAM))?.mean,
            Provenance::ReferenceChain,
        ),
    })
}

pub fn run(loaded: &Loaded, output: Option<PathBuf>) -> CliResult<()> {
    let dir = output_dir(loaded, output)?;
    let hash = &loaded.hash;
    write_json(&dir.join(format!("{hash}-config.json")), &loaded.canonical)?;
    match loaded.config.run.experiment {
        ExperimentKind::Mse => run_mse(loaded, &dir),
        ExperimentKind::Rate => run_rate(loaded, &dir),
    }
}

fn run_mse(loaded: &Loaded, dir: &Path) -> CliResult<()> {
    let hash = &loaded.hash;
    let target = build_target(&loaded.config, loaded.seed)?;
    let x0 = start_point(loaded, &target)?;
    let plan = match plans(loaded, &target, &x0)?.as_slice() {
        [p] => p.clone(),
        _ => return Err(CliError::Config("run needs a single plan; use tuning.eps instead of eps_grid".into())),
    };
    let reference = reference(loaded, &target)?;
    let summary_path = dir.join(format!("{hash}-summary.json"));
    let report = match mse_experiment(&*target.potential, &plan, &x0, loaded.config.run.replicates, &reference, loaded.seed)
    {
        Ok(r) => r,
        Err(e) => {
            write_json(
                &summary_path,
                &json!({ "status": "failed", "error": e.to_string(), "config_hash": hash, "plan": plan }),
            )?;
            return Err(e.into());
        }
    };
    let mut report = report;
    report.manifest.config_hash = Some(hash.clone());
    report.write_csv(BufWriter::new(File::create(dir.join(format!("{hash}-report.csv")))?))?;
    write_json(&summary_path, &report.summary())?;
    write_json(&dir.join(format!("{hash}-manifest.json")), &report.manifest)?;
    println!(
        "mse {:.6e} ci [{:.6e}, {:.6e}] finished {} diverged {} -> {}",
        report.mse,
        report.ci.0,
        report.ci.1,
        report.records.len() - report.diverged,
        report.diverged,
        dir.display()
    );
    Ok(())
}

fn run_rate(loaded: &Loaded, dir: &Path) -> CliResult<()> {
    let hash = &loaded.hash;
    let cfg = &loaded.config;
    let target = build_target(cfg, loaded.seed)?;
    let n_grid = required(cfg.data.as_ref().and_then(|d| d.n_grid.clone()), "data.n_grid")?;
    let method = match cfg.model.family {
        Family::GaussianLocation => PosteriorMeanMethod::Conjugate,
        _ => {
            let o = cfg.oracle.as_ref();
            PosteriorMeanMethod::Quadrature {
                nodes_per_axis: o.map_or(81, |o| o.nodes_per_axis),
                k_sigma: o.map_or(10.0, |o| o.k_sigma),
            }
        }
    };
    let report = bayes_rate_experiment(
        &target.model,
        &cfg.prior.clone().unwrap_or_default(),
        &theta_star(cfg),
        cfg.model.alpha_c,
        &n_grid,
        cfg.run.replicates,
        method,
        loaded.seed,
    )?;
    write_rate_csv(&report, &dir.join(format!("{hash}-rate.csv")))?;
    write_json(&dir.join(format!("{hash}-summary.json")), &report)?;
    println!(
        "slope {:.4} (expected {:.4}) r2 {:.4} -> {}",
        report.fit.slope,
        report.expected_slope,
        report.fit.r2,
        dir.display()
    );
    Ok(())
}

/// One row per sample size, then a fit row carrying slope, intercept and r².
fn write_rate_csv(report: &RateReport, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "n", "mse", "std_error", "slope", "intercept", "r2", "expected_slope"])?;
    for p in &report.points {
        w.write_record([
            "point".to_string(),
            p.n.to_string(),
            format!("{:.16e}", p.mse),
            format!("{:.16e}", p.std_error),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    let f = &report.fit;
    w.write_record([
        "fit".to_string(),
        String::new(),
        String::new(),
        String::new(),
        format!("{:.16e}", f.slope),
        format!("{:.16e}", f.intercept),
        format!("{:.16e}", f.r2),
        format!("{:.16e}", report.expected_slope),
    ])?;
    w.flush()?;
    Ok(())
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn profile_outcome(r: cesaro_lmc::Result<ProfileReport>) -> CliResult<Outcome> {
    match r {
        Ok(rep) => {
            let detail = format!(
                "probes {} violations {} lower {:.4} upper {:.4}",
                rep.n_probes, rep.n_violations, rep.worst_lower_ratio, rep.worst_upper_ratio
            );
            Ok(if rep.passed { Outcome::Pass(detail) } else { Outcome::Fail(detail) })
        }
        Err(cesaro_lmc::Error::Capability(m)) => Ok(Outcome::Skip(m)),
        Err(e) => Err(e.into()),
    }
}

pub fn verify(loaded: &Loaded, strict: bool) -> CliResult<()> {
    let cfg = &loaded.config;
    let diag = &cfg.diagnostics;
    let target = build_target(cfg, loaded.seed)?;
    let p = &*target.potential;
    let seed = |k: u64| mix_seed(mix_seed(loaded.seed, VERIFY_STREAM), k);
    let form = match diag.bound_form {
        BoundFormChoice::AsPrinted => BoundForm::AsPrinted,
        BoundFormChoice::Corrected => BoundForm::Corrected,
    };
    let mut checks: Vec<(&str, Outcome)> = vec![
        ("gradient_fd", profile_outcome(check_gradient_fd(p, diag.probes, diag.radius, seed(0)))?),
        ("lipschitz", profile_outcome(check_lipschitz(p, diag.probes, diag.radius, seed(1)))?),
        ("convexity_profile", profile_outcome(check_convexity_profile(p, diag.probes, diag.radius, seed(2)))?),
    ];
    if matches!(p.profile(), ConvexityProfile::WeaklyConvexKl { .. }) {
        checks.push(("kl_profile", profile_outcome(verify_kl_profile(p, diag.probes, diag.radius, seed(3)))?));
        checks.push(("grad_bounds", profile_outcome(verify_grad_bounds(p, diag.probes, seed(4), form))?));
    } else {
        let why = "target does not declare a KL profile".to_string();
        checks.push(("kl_profile", Outcome::Skip(why.clone())));
        checks.push(("grad_bounds", Outcome::Skip(why)));
    }
    if diag.concentration {
        checks.extend(concentration_checks(loaded, &target, seed(5))?);
    }

    let mut failed = 0;
    for (name, outcome) in &checks {
        match outcome {
            Outcome::Pass(d) => println!("PASS {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
            Outcome::Skip(d) if strict => {
                failed += 1;
                println!("FAIL {name}: skipped under --strict: {d}");
            }
            Outcome::Skip(d) => println!("SKIP {name}: {d}"),
        }
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn concentration_checks(loaded: &Loaded, target: &Target, seed: u64) -> CliResult<Vec<(&'static str, Outcome)>> {
    let cfg = &loaded.config;
    let diag = &cfg.diagnostics;
    let model = &target.model;
    let theta = theta_star(cfg);
    let table_outcome = |t: cesaro_lmc::Result<cesaro_lmc::diagnostics::ConcentrationTable>| -> CliResult<Outcome> {
        match t {
            Ok(t) => {
                let worst = t
                    .rows
                    .iter()
                    .map(|r| r.frequency - r.bound)
                    .fold(f64::NEG_INFINITY, f64::max);
                let detail = format!("n {} sims {} max(freq - bound) {:.4}", t.n, t.simulations, worst);
                Ok(if t.passed() { Outcome::Pass(detail) } else { Outcome::Fail(detail) })
            }
            Err(cesaro_lmc::Error::Capability(m)) => Ok(Outcome::Skip(m)),
            Err(e) => Err(e.into()),
        }
    };
    let mut out = Vec::new();
    // The first coordinate is 1-Lipschitz with mean θ★₀ for the symmetric
    // location families.
    let first = |xi: &[f64]| xi[0];
    let stat = LipschitzStatistic {
        f: &first,
        lipschitz: 1.0,
        mean: theta.first().copied().unwrap_or(0.0),
    };
    let deviation = match cfg.model.family {
        Family::Logistic => Outcome::Skip("no symmetric 1-Lipschitz statistic for the logistic family".into()),
        _ => table_outcome(concentration_check(
            model,
            &stat,
            &theta,
            diag.concentration_n,
            &diag.deltas,
            diag.simulations,
            seed,
            cfg.model.poincare,
        ))?,
    };
    out.push(("deviation", deviation));
    out.push((
        "score_deviation",
        table_outcome(gradient_concentration_check(
            model,
            &theta,
            model.observation_lipschitz(),
            diag.concentration_n,
            &diag.deltas,
            diag.simulations,
            mix_seed(seed, 1),
            cfg.model.poincare,
        ))?,
    ));
    Ok(out)
}

pub fn oracle(loaded: &Loaded, output: Option<PathBuf>) -> CliResult<()> {
    let cfg = &loaded.config;
    let block = required(cfg.oracle.clone(), "oracle")?;
    let target = build_target(cfg, loaded.seed)?;
    let p = &*target.potential;
    let record = match block.kind {
        OracleKind::Quadrature => {
            let q = quadrature_posterior_mean(p, block.nodes_per_axis, block.k_sigma)?;
            OracleRecord {
                target: p.describe(),
                value: json!(q.mean),
                error_estimate: q.error_estimate,
                method: "quadrature".into(),
                settings: json!({ "nodes_per_axis": block.nodes_per_axis, "k_sigma": block.k_sigma }),
            }
        }
        OracleKind::Poisson => {
            let spec = PoissonGrid {
                k_sigma: block.k_sigma,
                ..PoissonGrid::default()
            };
            let s = poisson_solve_1d(p, |x: f64| x, &spec)?;
            OracleRecord {
                target: p.describe(),
                value: json!({ "grid": s.grid, "g": s.g, "g_prime": s.g_prime, "pi_f": s.pi_f, "pi_g": s.pi_g }),
                error_estimate: s.residual_sup,
                method: "poisson-1d".into(),
                settings: json!({ "source": "identity", "grid": spec, "cells": s.cells, "interior": s.interior }),
            }
        }
        OracleKind::Ou => {
            if cfg.model.family != Family::GaussianLocation || cfg.model.d != 1 || target.dataset.is_some() {
                return Err(CliError::Config("the ou oracle needs a one-dimensional gaussian_location target".into()));
            }
            let x0 = start_point(loaded, &target)?;
            let plan = match plans(loaded, &target, &x0)?.as_slice() {
                [p] => p.clone(),
                _ => return Err(CliError::Config("the ou oracle needs a single plan".into())),
            };
            let rho = p.smoothness().lipschitz;
            let m = target.closed_form_mean.as_ref().map_or(0.0, |c| c[0]);
            let mo = ou_cesaro_moments(rho, m, plan.gamma, plan.n_steps, x0[0])?;
            OracleRecord {
                target: p.describe(),
                value: json!(mo),
                error_estimate: 0.0,
                method: "ou-closed-form".into(),
                settings: json!({ "gamma": plan.gamma, "n_steps": plan.n_steps, "x0": x0[0] }),
            }
        }
        OracleKind::ReferenceChain => {
            let r = reference_chain(p, block.eps_ref, mix_seed(loaded.seed, REFERENCE_STREAM))?;
            OracleRecord {
                target: p.describe(),
                value: json!(r.mean),
                error_estimate: r.std_error_norm(),
                method: "reference-chain".into(),
                settings: json!({
                    "eps_ref": block.eps_ref,
                    "gamma": r.gamma,
                    "n_steps": r.n_steps,
                    "replicates": r.replicates,
                }),
            }
        }
    };
    if let Some(dir) = output.or_else(|| cfg.run.output.clone()) {
        std::fs::create_dir_all(&dir)?;
        write_json(&dir.join(format!("{}-oracle.json", loaded.hash)), &record)?;
    }
    print_json(&record)
}
