use std::process::{Command, Output};

use serde_json::Value;

fn levyd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levyd"))
        .args(args)
        .env("LEVY_THREADS", "2")
        .output()
        .expect("levyd runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gaussian_density_csv() {
    let out = levyd(&["density", "--model", "builtin:gaussian", "--t", "1", "--grid", "-10:10:0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("#config.subcommand=density\n"));
    assert!(text.contains("#config.threads=2\n"));
    assert!(text.lines().any(|l| l.starts_with("#model_hash=")));
    let row = text.lines().find(|l| l.starts_with("0,")).expect("x=0 row");
    let p: f64 = row[2..].parse().unwrap();
    assert!((p - 0.28209).abs() < 5e-6, "{p}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2002);
}

#[test]
fn sym_gamma_hw_threshold() {
    let out = levyd(&["diagnose", "hw", "--model", "builtin:sym_gamma", "--k", "4:40", "--t", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["functional"], "hw");
    let r = &v["result"];
    assert!((r["trailing_min"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(r["threshold_compare"]["pass"], true);
}

#[test]
fn exa4_has_no_density() {
    let out = levyd(&["classify", "--model", "builtin:exa4_atoms"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["result"]["verdict"].as_str().unwrap().starts_with("no density"));
    let subs = v["result"]["growth"]["subsequences"].as_array().unwrap();
    assert!(subs.iter().any(|s| s["parity"] == "even"));
}

#[test]
fn refusal_exits_two() {
    let out = levyd(&["density", "--model", "builtin:sym_gamma", "--t", "0.3", "--grid", "-1:1:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["refusal"].as_str().unwrap().contains("not integrable"));
}

#[test]
fn usage_errors_exit_one() {
    let out = levyd(&["density", "--model", "builtin:gaussian", "--t", "1", "--grid", "0:1:0.5", "--radial", "0:1:0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = levyd(&["density", "--model", "builtin:gaussian", "--t", "1", "--bogus", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = levyd(&["diagnose", "kallenberg", "--model", "builtin:gaussian", "--phi", "builtin:gaussian"]);
    assert_eq!(out.status.code(), Some(1));
    let out = levyd(&["psi", "--model", "builtin:nope", "--xi", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_model_file_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "dim = 1\ndrift = [0.0]\ngaussian = [0.0]\n\n[measure]\nvariant = \"radial_family\"\n\n[measure.params]\nfamily = \"stable\"\nalpha = 3.0\n",
    )
    .unwrap();
    let out = levyd(&["psi", "--model", path.to_str().unwrap(), "--xi", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 10"), "{err}");
    assert!(err.contains("measure.params.alpha"), "{err}");
}

#[test]
fn model_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cauchy.toml");
    std::fs::write(&path, levy_density::modelfile::save(&levy_density::library::builtin("cauchy").unwrap())).unwrap();
    let a = levyd(&["psi", "--model", path.to_str().unwrap(), "--xi", "2.5", "--format", "json"]);
    let b = levyd(&["psi", "--model", "builtin:cauchy", "--xi", "2.5", "--format", "json"]);
    assert_eq!(json(&a)["result"], json(&b)["result"]);
    assert!((json(&a)["result"][0]["re"].as_f64().unwrap() - 2.5).abs() < 1e-10);
    assert_eq!(json(&a)["config"]["model_hash"], json(&b)["config"]["model_hash"]);
}

#[test]
fn psi_ray_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let out = levyd(&["psi", "--model", "builtin:gaussian(dim=2)", "--ray", "0:2:1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("r,re,im\n0,"));
    assert!(text.contains("\n2,4.000000000000000e0,"));
}

#[test]
fn selftest_single_criterion() {
    let out = levyd(&["selftest", "--only", "11"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("[PASS] 11"));
}
