use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circledyn")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_chebyshev_is_case_ii() {
    let out = run(&["classify", "--map", "z^2-2", "--nmax", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "CIRCLE_CASE_II");
    assert_eq!(v["interval_i"][0].as_f64().unwrap(), -2.0);
    assert_eq!(v["interval_i"][1].as_f64().unwrap(), 2.0);
}

#[test]
fn classify_exit_codes() {
    assert_eq!(run(&["classify", "--map", "z^2+1", "--nmax", "4"]).status.code(), Some(4));
    assert_eq!(run(&["classify", "--map", "z^2", "--nmax", "13"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--map", "z^2+"]).status.code(), Some(2));
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--coeffs", "/definitely/not/here.json"]).status.code(), Some(5));
}

#[test]
fn classify_is_deterministic_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&["classify", "--example", "EX1", "--c", "0.25", "--nmax", "4", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "CIRCLE_CASE_III");
    assert_eq!(v["x0"], "inf");
}

#[test]
fn classify_from_coefficient_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    fs::write(&path, r#"{"num": [[-2, 0], [0, 0], [1, 0]], "den": [[1, 0]]}"#).unwrap();
    let out = run(&["classify", "--coeffs", path.to_str().unwrap(), "--nmax", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "CIRCLE_CASE_II");
}

#[test]
fn julia_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("j.csv");
    let pgm = dir.path().join("j.pgm");
    let out = run(&[
        "julia", "--map", "z^2-2", "--size", "300", "--out", csv.to_str().unwrap(), "--pgm", pgm.to_str().unwrap(),
        "--window", "-2.5,-1,2.5,1", "--res", "50,20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert_eq!(summary["points"], 300);

    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 300);
    for line in text.lines() {
        let (re, im) = line.split_once(',').unwrap();
        let (re, im): (f64, f64) = (re.parse().unwrap(), im.parse().unwrap());
        assert!(re.abs() <= 2.0 + 1e-9 && im.abs() < 1e-9, "{line}");
    }

    let bytes = fs::read(&pgm).unwrap();
    let header = b"P5\n50 20\n255\n";
    assert!(bytes.starts_with(header));
    let pixels = &bytes[header.len()..];
    assert_eq!(pixels.len(), 50 * 20);
    assert!(pixels.iter().all(|&p| p == 0 || p == 255));
    // only the row holding the real axis lights up
    for (row, chunk) in pixels.chunks(50).enumerate() {
        assert_eq!(chunk.contains(&255), row == 10, "row {row}");
    }
}

#[test]
fn julia_window_missing_the_set_is_black() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("k.pgm");
    let csv = dir.path().join("k.csv");
    let out = run(&[
        "julia", "--map", "z^2-2", "--size", "100", "--out", csv.to_str().unwrap(), "--pgm", pgm.to_str().unwrap(),
        "--window", "5,5,6,6", "--res", "16,16",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = fs::read(&pgm).unwrap();
    assert!(bytes[bytes.len() - 256..].iter().all(|&p| p == 0));
}

#[test]
fn julia_rejects_bad_raster() {
    assert_eq!(run(&["julia", "--map", "z^2-2", "--res", "5000,5000"]).status.code(), Some(2));
    assert_eq!(run(&["julia", "--map", "z^2-2", "--window", "1,1,0,2"]).status.code(), Some(2));
}

#[test]
fn poincare_at_chebyshev_endpoint() {
    let out = run(&["poincare", "--map", "z^2-2", "--at", "2", "--order", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let coeffs = v["series"]["coeffs"].as_array().unwrap();
    assert_eq!(coeffs.len(), 12);
    // Psi(z) = 2 cosh(sqrt(z)) = 2 + z + z^2/12 + ...
    assert!((coeffs[1][0].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-14);
    let rho = v["valiron"]["rho_measured"].as_f64().unwrap();
    assert!((rho - 0.5).abs() < 0.05, "{rho}");
}

#[test]
fn poincare_guards() {
    assert_eq!(run(&["poincare", "--map", "z^2", "--at", "0"]).status.code(), Some(2));
    assert_eq!(run(&["poincare", "--map", "z^2", "--at", "3"]).status.code(), Some(2));
    assert_eq!(run(&["poincare", "--map", "z^2", "--at", "abc"]).status.code(), Some(2));
}

#[test]
fn construct_quadratic() {
    let out = run(&["construct", "--values", "-0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let c: Vec<f64> = v["coeffs"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in c.iter().zip([1.0, -6.0, 6.0]) {
        assert!((got - want).abs() < 1e-12, "{c:?}");
    }
    assert_eq!(run(&["construct", "--values", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["construct"]).status.code(), Some(2));
}

#[test]
fn construct_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(&path, r#"{"critical_values": [1.5, -0.5, 2.0]}"#).unwrap();
    let out = run(&["construct", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["value_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 5);
}

#[test]
fn examples_reports() {
    let out = run(&["examples", "--example", "EX1", "--c", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["ex1_threshold"]["agrees"], true);

    let out = run(&["examples", "--example", "EX3", "--p", "0.2", "--a", "0.5", "--eps", "0.001"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ex3_convergence"]["decreasing"], true);
    assert!(v["claims"]["claims"].as_array().unwrap().iter().all(|c| c["status"] != "fail"));

    assert_eq!(run(&["examples", "--example", "EX1", "--c", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["examples", "--example", "EX9"]).status.code(), Some(2));
}

#[test]
fn examples_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    fs::write(&path, r#"{"family": "EX2", "c": 0.9}"#).unwrap();
    let out = run(&["examples", "--example-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["instance"]["spec"]["family"], "EX2");
}

#[test]
fn thread_count_does_not_change_output() {
    let run_with = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_circledyn"))
            .args(["classify", "--map", "z^2-2", "--nmax", "3"])
            .env("CIRCLEDYN_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run_with("1");
    let four = run_with("4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run_with("zero").status.code(), Some(2));
}
