use std::process::Command;

use opburgers::cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("opburgers").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn list_has_nine_rows() {
    let (code, out, _) = call(&["list"]);
    assert_eq!(code, EXIT_PASS);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let schw = rows.iter().find(|r| r.starts_with("schwarzschild")).unwrap();
    assert!(schw.contains("4.25") && schw.contains("fractional"));

    let (code, out, _) = call(&["list", "--format", "json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);

    assert_eq!(call(&["list", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(call(&["list", "--format", "xml"]).0, EXIT_USAGE);
}

#[test]
fn describe_and_unknown_ids() {
    let (code, out, _) = call(&["describe", "hyp-frac:laplacian"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["time_op"], "fractional");
    assert_eq!(call(&["describe", "no-such-id"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "no-such-id"]).0, EXIT_USAGE);
    assert_eq!(call(&["sweep", "no-such-id"]).0, EXIT_USAGE);
    assert_eq!(call(&["transform", "no-such-id", "forward"]).0, EXIT_USAGE);
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_PASS);
}

#[test]
fn special_values() {
    assert_eq!(call(&["special", "ml", "--beta", "1", "--z", "1"]).1.trim(), "2.71828182846");
    assert_eq!(call(&["special", "hermite", "--n", "3", "--f", "2", "--h", "1"]).1.trim(), "20");
    let (code, out, _) = call(&["special", "kernel", "--eta", "1", "--t", "1"]);
    assert_eq!(code, EXIT_PASS);
    let v: f64 = out.trim().parse().unwrap();
    assert!((v - 0.260_696_797_421_273_92).abs() < 1e-9);
    // module errors
    assert_eq!(call(&["special", "hermite", "--n", "25", "--f", "1", "--h", "1"]).0, EXIT_FAIL);
    assert_eq!(call(&["special", "kernel", "--eta", "-1", "--t", "1"]).0, EXIT_FAIL);
    assert_eq!(call(&["special", "ml", "--beta", "1"]).0, EXIT_USAGE);
}

#[test]
fn verify_passes_on_exact_solutions_and_flags_the_control() {
    let (code, out, err) = call(&["verify", "euclid-classic"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["scenario"], "euclid-classic");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(v["residual"]["order"].as_f64().unwrap() >= 1.8);
    assert_eq!(v["excluded_points"], 0);

    let (code, out, err) = call(&["verify", "euclid-classic", "--perturb", "0.1", "--format", "csv"]);
    assert_eq!(code, EXIT_FAIL);
    assert!(out.starts_with("name,max_dev,tol,pass"));
    assert!(out.lines().any(|l| l.starts_with("residual,") && l.ends_with(",false")));
    assert!(err.contains("failed: residual"));

    let (code, out, _) = call(&["verify", "euclid-frac"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"constraint-identity"));
    let order = v["residual"]["order"].as_f64().unwrap();
    assert!((1.1..=1.9).contains(&order));
}

#[test]
fn verify_config_errors() {
    assert_eq!(call(&["verify", "euclid-classic", "--grid", "3x9"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "euclid-classic", "--grid", "8x8x8"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "euclid-classic", "--grid", "abc"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "euclid-classic", "--levels", "2"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "euclid-classic", "--solution", "nope"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "euclid-classic", "--format", "xml"]).0, EXIT_USAGE);
}

#[test]
fn reports_are_byte_stable() {
    let a = call(&["verify", "hyp-2d", "--seed", "3"]);
    let b = call(&["verify", "hyp-2d", "--seed", "3"]);
    assert_eq!(a.0, EXIT_PASS);
    assert_eq!(a.1, b.1);
}

#[test]
fn report_and_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let pts = dir.path().join("p.csv");
    let (code, out, _) = call(&[
        "verify",
        "hyp-csch",
        "--grid",
        "6x4",
        "--out",
        rep.to_str().unwrap(),
        "--points",
        pts.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["residual"]["per_term"].as_object().unwrap().len(), 4);
    let csv = std::fs::read_to_string(&pts).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eta,t,u,time,nonlinear[eta],diffusion,source,residual");
    assert_eq!(lines.count(), 24);
}

#[test]
fn transform_tables() {
    let (code, out, err) = call(&["transform", "euclid-classic", "backward", "--grid", "5x3"]);
    assert_eq!(code, EXIT_PASS);
    assert!(err.starts_with("0 of 15 rows excluded"));
    let rows: Vec<Vec<String>> = out.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    // ψ(x, t) / ψ(x', t) = exp(A b ((x² - x'²)/2 + x - x'))
    let (t, c, t0): (f64, f64, f64) = (1.05, 0.1, -1.0);
    let b = c * (t - t0) / (1.0 - 2.0 * c * (t - t0));
    let a = 1.0 / (t - t0);
    let at_t: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == t)
        .map(|r| (r[0].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    let (x0, p0) = at_t[0];
    for &(x, p) in &at_t[1..] {
        let expected = (a * b * (0.5 * (x * x - x0 * x0) + x - x0)).exp();
        assert!((p / p0 - expected).abs() < 1e-8 * expected);
    }

    let (code, out, err) = call(&["transform", "hyp-sinh", "forward", "--solution", "hermite-2"]);
    assert_eq!(code, EXIT_PASS);
    assert!(err.starts_with("0 of"));
    for l in out.lines().skip(1) {
        let dev: f64 = l.split(',').nth(4).unwrap().parse().unwrap();
        assert!(dev < 1e-8);
    }

    // H₃ = x³ + 6tx changes sign at x = 0
    let (code, out, err) = call(&["transform", "euclid-classic", "forward", "--solution", "hermite-3", "--grid", "5x2"]);
    assert_eq!(code, EXIT_PASS);
    assert!(err.starts_with("6 of 10 rows excluded"));
    assert_eq!(out.lines().filter(|l| l.ends_with(",excluded")).count(), 6);

    assert_eq!(call(&["transform", "euclid-frac", "forward"]).0, EXIT_USAGE);
}

#[test]
fn sweep_and_kernel_outputs() {
    let (code, out, _) = call(&["sweep", "hyp-sinh", "--solution", "hermite-3", "--format", "csv"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out.lines().next().unwrap(), "h,max_abs,excluded");
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert_eq!(call(&["sweep", "hyp-sinh", "--perturb", "0.1"]).0, EXIT_FAIL);
    assert_eq!(call(&["sweep", "hyp-mixed"]).0, EXIT_USAGE);

    let (code, out, _) = call(&["kernel", "--eta-n", "3", "--t", "1"]);
    assert_eq!(code, EXIT_PASS);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2] && w[1][2] > 0.0));
    assert!(rows.iter().all(|r| r[3] < 0.0));
    assert_eq!(call(&["kernel", "--eta-lo", "0"]).0, EXIT_USAGE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_opburgers");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(code(&["list"]), Some(0));
    assert_eq!(code(&["list", "--nope"]), Some(2));
    assert_eq!(code(&["verify", "no-such-id"]), Some(2));
    assert_eq!(code(&["special", "hermite", "--n", "3", "--f", "2", "--h", "1"]), Some(0));
}
