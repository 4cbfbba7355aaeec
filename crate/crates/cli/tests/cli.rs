use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cesaro-lmc");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

#[test]
fn ou_smoke_run_succeeds_and_writes_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("ou_smoke.json");
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--output", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for suffix in ["-report.csv", "-summary.json", "-manifest.json", "-config.json"] {
        assert_eq!(files_with_suffix(out.path(), suffix).len(), 1, "missing {suffix}");
    }
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(&files_with_suffix(out.path(), "-summary.json")[0]).unwrap()).unwrap();
    assert_eq!(summary["finished"], 500);
    assert_eq!(summary["reference"]["provenance"], "closed-form");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("ou_smoke.json");
    for dir in [&a, &b] {
        let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let fa = files_with_suffix(a.path(), "");
    let fb = files_with_suffix(b.path(), "");
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("ou_smoke.json");
    for (dir, jobs) in [(&a, "1"), (&b, "4")] {
        let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--jobs", jobs, "--output", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ra = std::fs::read(&files_with_suffix(a.path(), "-report.csv")[0]).unwrap();
    let rb = std::fs::read(&files_with_suffix(b.path(), "-report.csv")[0]).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn config_hash_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_config(
        dir.path(),
        "a.json",
        r#"{"model":{"family":"gaussian_location","d":1},"tuning":{"regime":"fixed","gamma":0.1,"n_steps":50},"run":{"replicates":20,"base_seed":5}}"#,
    );
    let two = write_config(
        dir.path(),
        "b.json",
        r#"{"run":{"base_seed":5,"replicates":20},"tuning":{"n_steps":50,"gamma":0.1,"regime":"fixed"},"model":{"d":1,"family":"gaussian_location"}}"#,
    );
    let (oa, ob) = (dir.path().join("oa"), dir.path().join("ob"));
    for (c, o) in [(&one, &oa), (&two, &ob)] {
        let r = cli(&["run", "--config", c, "--output", o.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    }
    let name = |d: &Path| files_with_suffix(d, "-summary.json")[0].file_name().unwrap().to_owned();
    assert_eq!(name(&oa), name(&ob));
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "bad.json",
        r#"{"model":{"family":"gaussian_location","d":1,"stepsize":0.1},"run":{"base_seed":1}}"#,
    );
    let o = cli(&["tune", "--config", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepsize"), "{}", stderr(&o));
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "noseed.json",
        r#"{"model":{"family":"gaussian_location","d":1},"tuning":{"regime":"fixed","gamma":0.1,"n_steps":10}}"#,
    );
    let o = cli(&["tune", "--config", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    let o = cli(&["tune", "--config", &c, "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn invalid_parameter_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "neg.json",
        r#"{"model":{"family":"gaussian_location","d":1},"tuning":{"regime":"fixed","gamma":-0.1,"n_steps":10},"run":{"base_seed":1}}"#,
    );
    assert_eq!(cli(&["tune", "--config", &c]).status.code(), Some(2));
}

#[test]
fn divergent_run_exits_three_and_records_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "div.json",
        r#"{"model":{"family":"gaussian_location","d":1},"tuning":{"regime":"fixed","gamma":3.0,"n_steps":2000},"run":{"replicates":20,"base_seed":1,"x0":[1.0]}}"#,
    );
    let out = dir.path().join("out");
    let o = cli(&["run", "--config", &c, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(&files_with_suffix(&out, "-summary.json")[0]).unwrap()).unwrap();
    assert_eq!(summary["status"], "failed");
}

#[test]
fn bayes_strongly_convex_tuning_example() {
    let cfg = configs().join("bayes_sc_tune.json");
    let o = cli(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((plan["gamma"].as_f64().unwrap() - 1e-4).abs() < 1e-15);
    assert_eq!(plan["n_steps"], 100);
    assert_eq!(plan["regime"], "Bayes-SC-i.a");
}

#[test]
fn eps_grid_prints_one_plan_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "grid.json",
        r#"{"model":{"family":"gaussian_location","d":2},"tuning":{"regime":"SC-i","eps_grid":[0.4,0.2,0.1]},"run":{"base_seed":1}}"#,
    );
    let o = cli(&["tune", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plans: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(plans.len(), 3);
    let n: Vec<u64> = plans.iter().map(|p| p["n_steps"].as_u64().unwrap()).collect();
    assert!(n[0] < n[1] && n[1] < n[2]);
}

#[test]
fn p_power_verification_battery_passes() {
    let cfg = configs().join("p_power_verify.json");
    let o = cli(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    for check in ["gradient_fd", "lipschitz", "kl_profile", "grad_bounds"] {
        assert!(out.contains(&format!("PASS {check}")), "{out}");
    }
    assert!(!out.contains("FAIL"));
}

#[test]
fn strict_verification_fails_on_unsupported_checks() {
    let cfg = configs().join("p_power_verify.json");
    let o = cli(&["verify", "--config", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inflated_curvature_constant_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "inflated.json",
        r#"{"model":{"family":"p_power","d":5,"params":{"p":0.75},
            "profile_override":{"kind":"weakly_convex_kl","c1":3.0,"c2":1.5,"q":0.3333333333333333,"r":0.3333333333333333}},
            "run":{"base_seed":11},"diagnostics":{"concentration":false}}"#,
    );
    let o = cli(&["verify", "--config", &c]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL kl_profile"), "{}", stdout(&o));
}

#[test]
fn gaussian_concentration_checks_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "conc.json",
        r#"{"model":{"family":"gaussian_location","d":2,"theta_star":[0.5,-0.25]},
            "run":{"base_seed":4},"diagnostics":{"simulations":2000}}"#,
    );
    let o = cli(&["verify", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS deviation"));
    assert!(stdout(&o).contains("PASS score_deviation"));
}

#[test]
fn rate_run_writes_fit_row() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("rate.json");
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--output", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&files_with_suffix(out.path(), "-rate.csv")[0]).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let slope_col = headers.iter().position(|h| h == "slope").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 7);
    let fit = rows.last().unwrap();
    assert_eq!(&fit[0], "fit");
    let slope: f64 = fit[slope_col].parse().unwrap();
    assert!(slope < 0.0);
}

#[test]
fn ou_oracle_matches_closed_form_mean() {
    let cfg = configs().join("ou_smoke.json");
    let o = cli(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // (1/N) Σ_{j<N} 2·0.9^j
    let expected = 2.0 * (1.0 - 0.9f64.powi(1000)) / (0.1 * 1000.0);
    assert!((rec["value"]["mean"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(rec["method"], "ou-closed-form");
}

#[test]
fn quadrature_oracle_on_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "quad.json",
        r#"{"model":{"family":"logistic","d":2,"params":{"ridge":0.1,
              "design":[[1.0,0.5],[-0.3,1.2],[0.8,-0.7],[0.1,0.9]],"labels":[1,-1,1,1]}},
            "run":{"base_seed":2},"oracle":{"kind":"quadrature","nodes_per_axis":61}}"#,
    );
    let o = cli(&["oracle", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["value"].as_array().unwrap().len(), 2);
    assert!(rec["error_estimate"].as_f64().unwrap() < 1e-6);
}
