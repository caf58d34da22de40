use std::path::PathBuf;
use std::process::Command;

use nahm::cli::{run_captured, CliError};
use serde_json::Value;

fn nahm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nahm")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn captured(args: &[&str]) -> nahm::cli::Outcome {
    run_captured(std::iter::once("nahm").chain(args.iter().copied())).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = captured(args);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    v
}

fn tmp(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("nahm-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn solve_rogers_ramanujan() {
    let v = json(&["solve", "--spec", "rr"]);
    assert_eq!(v["lambda_rational"], "1/60");
    assert!(v["z"][0].as_str().unwrap().starts_with("6.18033988749894848204586834365638117720"));
}

#[test]
fn solve_kanade_russell() {
    assert_eq!(json(&["solve", "--spec", "kr"])["lambda_rational"], "1/54");
}

#[test]
fn eval_at_real_q_and_tau() {
    let v = json(&["--prec", "30", "eval", "--spec", "rr", "--q", "0.5"]);
    assert!(v["value"].as_str().unwrap().starts_with("2.19791394569601381954484204"));
    let v = json(&["eval", "--spec", "rr", "--tau", "0,1"]);
    assert!(v["terms"].as_u64().unwrap() > 0);
}

#[test]
fn coeffs_in_both_formats() {
    let csv = captured(&["coeffs", "--spec", "kr", "--order", "5", "--format", "csv"]).stdout;
    assert_eq!(csv, "exponent,coeff\n5/18,1\n41/18,1\n59/18,1\n77/18,1\n");
    let v = json(&["coeffs", "--spec", "rr", "--order", "10"]);
    // partitions into parts ≡ ±1 mod 5
    let coeffs: Vec<&str> = v["terms"].as_array().unwrap().iter().map(|t| t[1].as_str().unwrap()).collect();
    assert_eq!(coeffs, ["1", "1", "1", "1", "2", "2", "3", "3", "4", "5", "6"]);
}

#[test]
fn identity_to_q300() {
    let out = captured(&["identity", "--file", "kr1", "--order", "300"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("verified to q^300"), "{}", out.stdout);
}

#[test]
fn false_identity_exits_one() {
    let p = tmp(
        "false.json",
        r#"{"name":"wrong","order":30,"sides":[
 {"nahm":{"A":[[2]],"b":[0],"d":[1]}},
 {"product":[{"a":1,"M":5,"e":-1},{"a":3,"M":5,"e":-1}]}]}"#,
    );
    let (code, out, _) = nahm(&["identity", "--file", p.to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(!out.contains("verified"));
}

#[test]
fn asympt_at_one() {
    let v = json(&["asympt", "--spec", "rr", "--order", "2"]);
    for row in v["rows"].as_array().unwrap() {
        assert!(row["rel_err"].as_f64().unwrap() < 1e-40);
    }
}

#[test]
fn transform_presets() {
    for p in ["rr", "kr"] {
        let v = json(&["verify-transform", "--preset", p]);
        assert_eq!(v["passed"], true, "{p}");
    }
}

#[test]
fn scan_csv_and_out_file() {
    let args = ["--prec", "30", "scan", "--rank", "2", "--d", "1,2", "--height", "1", "--b-height", "1"];
    let csv = captured(&args).stdout;
    assert!(csv.starts_with("A,b,c_est,d,third_diff,lambda,constraint\n"));
    let p = std::env::temp_dir().join(format!("nahm-cli-{}-scan.csv", std::process::id()));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", p.to_str().unwrap()]);
    let v = json(&with_out);
    assert_eq!(v["out"], p.to_str().unwrap());
    assert_eq!(std::fs::read_to_string(&p).unwrap(), csv);
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["solve", "--spec", "kr"][..],
        &["coeffs", "--spec", "b2inv", "--order", "20"],
        &["--prec", "30", "scan", "--rank", "2", "--d", "1,2", "--height", "1", "--b-height", "1", "--format", "json"],
    ] {
        assert_eq!(captured(args), captured(args));
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["solve"][..],
        &["eval", "--spec", "rr", "--q", "2"],
        &["scan", "--rank", "2", "--d", "1", "--height", "1"],
        &["--prec", "5", "solve", "--spec", "rr"],
        &["frobnicate"],
    ] {
        let (code, _, err) = nahm(args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn bad_spec_prints_schema() {
    let p = tmp("bad.json", r#"{"A": [[1, 2], [3]], "b": [0, 0], "d": [1, 1]}"#);
    let (code, _, err) = nahm(&["solve", "--spec", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("symmetric positive definite"));
    assert!(matches!(nahm::cli::load_spec("missing-file"), Err(CliError::Spec(_))));
}

#[test]
fn binary_matches_captured_output() {
    let (code, out, _) = nahm(&["solve", "--spec", "rr"]);
    assert_eq!(code, 0);
    assert_eq!(out, captured(&["solve", "--spec", "rr"]).stdout);
}

#[test]
fn quick_selftest_passes() {
    let (code, out, _) = nahm(&["selftest", "--quick"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().last().unwrap().ends_with(" 0 failed"));
    assert_eq!(captured(&["selftest", "--quick"]).stdout, out);
}
