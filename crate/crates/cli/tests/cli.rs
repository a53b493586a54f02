use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn betaconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betaconv"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const ELLIPTICAL: &str = r#"{
  "experiment": "elliptical-minima",
  "rho": 0.5,
  "radial": {"family": "pure-power", "gamma": 0.5},
  "n": 100,
  "reps": 200
}"#;

#[test]
fn simulate_is_byte_identical_under_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.json", ELLIPTICAL);
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = betaconv(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (o.stdout, fs::read(out.join("results.json")).unwrap())
    };
    let (a_out, a_file) = run("a", "7");
    let (b_out, b_file) = run("b", "7");
    assert_eq!(a_out, b_out);
    assert_eq!(a_file, b_file);
    let (c_out, _) = run("c", "8");
    assert_ne!(a_out, c_out);
}

#[test]
fn missing_config_names_the_path() {
    let o = betaconv(&["transform", "--config", "/nonexistent/job.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent/job.json"), "{}", stderr(&o));
}

#[test]
fn missing_input_csv_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"alpha": 1, "beta": 1, "input": "absent.csv"}"#,
    );
    let o = betaconv(&[
        "transform",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("absent.csv"), "{}", stderr(&o));
}

#[test]
fn bad_parameters_and_unknown_keys_are_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let neg = write_config(
        dir.path(),
        "neg.json",
        r#"{"alpha": -1, "beta": 1, "base": {"family": "uniform"}}"#,
    );
    let o = betaconv(&[
        "transform",
        "--config",
        neg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));

    let typo = write_config(
        dir.path(),
        "typo.json",
        r#"{"alpha": 1, "beta": 1, "bsae": {"family": "uniform"}}"#,
    );
    let o = betaconv(&["transform", "--config", typo.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bsae"), "{}", stderr(&o));

    let o = betaconv(&["tail-index", "--family", "pure-power:gamma=2", "--window", "0.5,0.1"]);
    assert_eq!(code(&o), 1);

    let o = betaconv(&["frobnicate"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn polar_minima_refuse_an_angular_law_without_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "polar.json",
        r#"{
  "experiment": "polar-minima",
  "rho": 0.5,
  "radial": {"family": "pure-power", "gamma": 0.5},
  "angular": {"family": "point-mass", "at": 0.5},
  "n": 100,
  "reps": 100
}"#,
    );
    let o = betaconv(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("density"), "{}", stderr(&o));
}

#[test]
fn recovery_instability_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pm.json",
        r#"{"alpha": 1, "beta": 2, "base": {"family": "point-mass", "at": 1}}"#,
    );
    let o = betaconv(&[
        "recover",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn verify_runs_filters_and_loosens() {
    let dir = tempfile::tempdir().unwrap();
    let o = betaconv(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("results.json"));
    assert_eq!(doc["passed"], Value::Bool(true));

    let o = betaconv(&["verify", "--only", "semigroup"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = doc["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["group"] == "semigroup"));

    let o = betaconv(&["verify", "--tol", "1e0", "--only", "williamson,survival-form"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["tolerance"].as_f64().unwrap() >= 1.0));

    let o = betaconv(&["verify", "--only", "bogus"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn gamma_transform_reproduces_the_reduced_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"op": "forward", "alpha": 1, "beta": 1, "base": {"family": "gamma", "shape": 2, "rate": 1}, "output_dir": "out"}"#,
    );
    let o = betaconv(&["transform", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let meta = read_json(&out.join("meta.json"));
    assert_eq!(meta["gamma_identity"]["passed"], Value::Bool(true));
    assert!(meta["gamma_identity"]["sup_error"].as_f64().unwrap() <= 1e-6);
    assert!(meta["consistency"]["residual"].as_f64().unwrap() <= 1e-7);
    let cdf = fs::read_to_string(out.join("scaled_cdf.csv")).unwrap();
    assert!(cdf.lines().count() > 500);
}

#[test]
fn recover_round_trip_from_a_named_base_and_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "u.json",
        r#"{"alpha": 1, "beta": 1, "base": {"family": "uniform"}, "output_dir": "named"}"#,
    );
    let o = betaconv(&["recover", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta = read_json(&dir.path().join("named/meta.json"));
    assert!(meta["reference_sup_error"].as_f64().unwrap() <= 1e-2, "{meta}");

    // Forward first, then recover from the written scaled CDF.
    let fwd = write_config(
        dir.path(),
        "f.json",
        r#"{"alpha": 1, "beta": 1, "base": {"family": "gamma", "shape": 2}, "output_dir": "fwd"}"#,
    );
    assert_eq!(code(&betaconv(&["transform", "--config", fwd.to_str().unwrap()])), 0);
    let rec = write_config(
        dir.path(),
        "r.json",
        r#"{"op": "recover", "alpha": 1, "beta": 1, "input": "fwd/scaled_cdf.csv", "output_dir": "rec"}"#,
    );
    let o = betaconv(&["recover", "--config", rec.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("rec/recovered_cdf.csv")).unwrap();
    let mut worst: f64 = 0.0;
    for line in text.lines().skip(1) {
        let (x, y) = line.split_once(',').unwrap();
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        let exact = 1.0 - (1.0 + x) * (-x).exp();
        worst = worst.max((y - exact).abs());
    }
    assert!(worst <= 1e-2, "{worst}");
}

#[test]
fn tail_index_of_a_named_law() {
    let o = betaconv(&["tail-index", "--family", "pure-power:gamma=2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = doc.to_string();
    assert!(text.contains("index_hat"), "{text}");
}
