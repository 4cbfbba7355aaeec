use cesaro_lmc::bayes::{GaussianLocationModel, PriorSpec};
use cesaro_lmc::diagnostics::{
    bayes_rate_experiment, moment_check, mse_experiment, replay, run_test_phi, LipschitzStatistic, PosteriorMeanMethod,
    Provenance, Reference, SeparationMap,
};
use cesaro_lmc::oracle::ou_cesaro_moments;
use cesaro_lmc::potentials::{builtin_gaussian_location, builtin_p_power, Potential};
use cesaro_lmc::sampler::ChainConfig;
use cesaro_lmc::tuning::{tune_sc, ScVariant, TuningInputs, TuningPlan};
use cesaro_lmc::Error;

fn fixed_plan(gamma: f64, n: u64) -> TuningPlan {
    TuningPlan::fixed(gamma, n).unwrap()
}

#[test]
fn ou_mse_matches_exact_second_moment() {
    let w = builtin_gaussian_location(1, &[0.0], 1.0).unwrap();
    let x0 = 1.0;
    let report = mse_experiment(&w, &fixed_plan(0.1, 1000), &[x0], 500, &Reference::new(vec![0.0], Provenance::ClosedForm), 5)
        .unwrap();
    let exact = ou_cesaro_moments(1.0, 0.0, 0.1, 1000, x0).unwrap();
    let second = exact.variance + exact.mean * exact.mean;
    assert!((report.mse / second - 1.0).abs() < 0.2, "{} vs {second}", report.mse);
    assert!(report.ci.0 <= report.mse && report.mse <= report.ci.1);
}

#[test]
fn zero_bias_mse_is_the_estimator_variance() {
    let w = builtin_gaussian_location(2, &[0.0; 2], 1.0).unwrap();
    let reference = Reference::new(vec![0.0; 2], Provenance::ClosedForm);
    let report = mse_experiment(&w, &fixed_plan(0.1, 500), &[0.0; 2], 400, &reference, 6).unwrap();
    let exact = ou_cesaro_moments(1.0, 0.0, 0.1, 500, 0.0).unwrap();
    let se = 2.0 * exact.variance * (1.0 / 400.0f64).sqrt();
    assert!((report.mse - 2.0 * exact.variance).abs() < 3.0 * se);
}

#[test]
fn mse_is_recomputable_and_manifest_replays_bit_identically() {
    let w = builtin_p_power(2, &[0.0; 2], 0.75).unwrap();
    let reference = Reference::new(vec![0.0; 2], Provenance::ClosedForm);
    let report = mse_experiment(&w, &fixed_plan(0.02, 800), &[0.5, 0.5], 40, &reference, 7).unwrap();
    assert_eq!(report.recompute_mse().to_bits(), report.mse.to_bits());
    let json = serde_json::to_string(&report.manifest).unwrap();
    let manifest = serde_json::from_str(&json).unwrap();
    let again = replay(&w, &manifest, &reference).unwrap();
    assert_eq!(again, report);
    let mut a = Vec::new();
    let mut b = Vec::new();
    report.write_csv(&mut a).unwrap();
    again.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sc_mse_scales_with_eps_squared() {
    let w = builtin_gaussian_location(2, &[0.0; 2], 1.0).unwrap();
    let x0 = [0.0; 2];
    let reference = Reference::new(vec![0.0; 2], Provenance::ClosedForm);
    let mse = |eps: f64| {
        let plan = tune_sc(&TuningInputs::from_potential(&w, &x0, eps).unwrap(), ScVariant::I).unwrap();
        mse_experiment(&w, &plan, &x0, 200, &reference, 8).unwrap().mse
    };
    let ratio = mse(0.1) / mse(0.2);
    assert!((0.125..=0.5).contains(&ratio), "{ratio}");
}

#[test]
fn too_many_divergences_fail_the_experiment() {
    let w = builtin_gaussian_location(1, &[0.0], 1.0).unwrap();
    let reference = Reference::new(vec![0.0], Provenance::ClosedForm);
    let err = mse_experiment(&w, &fixed_plan(2.5, 10_000), &[1.0], 10, &reference, 9).unwrap_err();
    assert!(matches!(err, Error::Experiment(_)), "{err}");
}

#[test]
fn doubling_replicates_narrows_the_interval() {
    let w = builtin_gaussian_location(1, &[0.0], 1.0).unwrap();
    let reference = Reference::new(vec![0.0], Provenance::ClosedForm);
    let width = |m| {
        let r = mse_experiment(&w, &fixed_plan(0.1, 300), &[0.0], m, &reference, 10).unwrap();
        r.ci.1 - r.ci.0
    };
    let ratio = width(400) / width(1600);
    assert!((ratio / 2.0 - 1.0).abs() < 0.25, "{ratio}");
}

#[test]
fn posterior_risk_is_linear_in_dimension() {
    let grid = [200, 400, 800, 1600];
    let risk = |d: usize| {
        let model = GaussianLocationModel::new(d, 1.0).unwrap();
        let r = bayes_rate_experiment(&model, &PriorSpec::gaussian(1.0), &vec![0.3; d], 1.0, &grid, 400, PosteriorMeanMethod::Conjugate, 11)
            .unwrap();
        r.points[1].mse
    };
    let ratio = risk(4) / risk(2);
    assert!((ratio / 2.0 - 1.0).abs() < 0.3, "{ratio}");
}

#[test]
fn rate_report_exposes_the_fit() {
    let model = GaussianLocationModel::new(1, 1.0).unwrap();
    let r = bayes_rate_experiment(&model, &PriorSpec::flat(), &[0.0], 1.0, &[100, 200, 400, 800], 100, PosteriorMeanMethod::Conjugate, 12)
        .unwrap();
    assert_eq!(r.fit.x.len(), 4);
    assert_eq!(r.expected_slope, -1.0);
    assert!(r.fit.slope < 0.0);
}

#[test]
fn test_errors_shrink_with_sample_size() {
    let model = GaussianLocationModel::new(1, 1.0).unwrap();
    let first = |xi: &[f64]| xi[0];
    let psi = LipschitzStatistic { f: &first, lipschitz: 1.0, mean: 0.0 };
    let c = SeparationMap { b1: 1.0, b2: 1.0, alpha_c: 1.0 };
    let small = run_test_phi(&model, &psi, &[0.0], &[0.3], 25, 0.3, &c, 20_000, 13, None).unwrap();
    let large = run_test_phi(&model, &psi, &[0.0], &[0.3], 100, 0.3, &c, 20_000, 13, None).unwrap();
    assert!(small.passed() && large.passed());
    assert!(large.type_i.frequency < small.type_i.frequency);
    assert!(large.type_ii.frequency < small.type_ii.frequency);
    // The bound exponent is linear in n.
    let e_small = (small.type_i.bound / 2.0).ln();
    let e_large = (large.type_i.bound / 2.0).ln();
    assert!((e_large / e_small - 4.0).abs() < 1e-12);
}

#[test]
fn gaussian_second_moment_of_potential() {
    let d = 2;
    let gamma = 0.01;
    let w = builtin_gaussian_location(d, &[0.0; 2], 1.0).unwrap();
    let cfg = ChainConfig::new(gamma, 2_000_000, vec![0.0; 2], 14);
    let report = moment_check(&w, &cfg, &[2.0], 1.0 / 16.0, None).unwrap();
    // Chain stationary law is N(0, s I) with s = 1/(1 − γ/2); W = |x|²/2 + 1.
    let s = 1.0 / (1.0 - gamma / 2.0);
    let df = d as f64;
    let exact = s * s * (df * df + 2.0 * df) / 4.0 + s * df + 1.0;
    let row = &report.rows[0];
    let last = row.checkpoints.last().unwrap().value;
    assert!((last / exact - 1.0).abs() < 0.05, "{last} vs {exact}");
    assert!(row.implied_constant.unwrap().is_finite());
    assert_eq!(w.offset(), Some(1.0));
}
