use std::f64::consts::PI;
use std::path::PathBuf;

use gpi_cli::{run, EXIT_OK, EXIT_USAGE};

fn configs(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn gpi(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gpi").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("not JSON ({e}): {s}"))
}

#[test]
fn moment_of_independent_squares() {
    let (code, out, _) = gpi(&["moment", "--sigma", &configs("sigma/identity2.json"), "--alpha", "2,2"]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn moment_methods_and_seeds() {
    let sigma = configs("sigma/rho3.json");
    let (code, out, _) = gpi(&["moment", "--sigma", &sigma, "--alpha", "-0.3,1.5,0", "--method", "quad"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out)["method"], "quadrature");
    let args = ["moment", "--sigma", &sigma, "--alpha", "1,1,1", "--method", "mc", "--samples", "5000", "--seed", "3"];
    let (a, b) = (gpi(&args), gpi(&args));
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
    assert_eq!(json(&a.1)["samples"], 5000);
}

#[test]
fn prop1_4_bound_reports_the_constant() {
    let (code, out, _) = gpi(&["bound", "--kind", "prop1_4", "--sigma", &configs("sigma/rho3.json"), "--alpha", "-0.5,1,1"]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!((v["constant"].as_f64().unwrap() - PI / 2.0).abs() < 1e-11);
    assert!(v["lower"].as_f64().unwrap() <= v["lhs"].as_f64().unwrap());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["moment", "--bogus"][..],
        &["frobnicate"],
        &["bound", "--kind", "thm9", "--sigma", "x.json", "--alpha", "1"],
        &["sweep", "--format", "xml"],
    ] {
        let (code, out, err) = gpi(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }
    let (code, out, err) = gpi(&["moment", "--sigma", &configs("sigma/identity2.json"), "--alpha", "-1.5,2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty() && err.contains("α"));
    let (code, _, err) = gpi(&["moment", "--sigma", "/nonexistent.json", "--alpha", "1,1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nonexistent"));
    let (code, _, _) = gpi(&["bound", "--kind", "prop1_5", "--sigma", &configs("sigma/rho3.json"), "--alpha", "0.5,1,1"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn help_goes_to_the_data_stream() {
    let (code, out, err) = gpi(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("sweep") && err.is_empty());
}

#[test]
fn verify_explicit_cases() {
    let (code, out, err) = gpi(&["verify", "--config", &configs("verify_example.json"), "--format", "csv"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn shipped_default_sweep_passes() {
    let path = std::env::temp_dir().join(format!("gpi-cli-sweep-{}.json", std::process::id()));
    let (code, out, err) = gpi(&["sweep", "--config", &configs("default.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.is_empty());
    let report = json(&std::fs::read_to_string(&path).unwrap());
    std::fs::remove_file(&path).unwrap();
    assert_eq!(report["summary"]["failed"], 0);
    assert_eq!(report["summary"]["total"], 1100);
}

#[test]
fn sweep_output_is_byte_identical() {
    let args = ["sweep", "--config", &configs("default.json"), "--trials", "2", "--seed", "5", "--format", "csv"];
    let (a, b) = (gpi(&args), gpi(&args));
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1.lines().count(), 1 + 2 * 11);
}

#[test]
fn hunt_reports_no_candidates() {
    let (code, out, err) = gpi(&["hunt", "--n", "3", "--trials", "25", "--seed", "2", "--samples", "4000"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v = json(&out);
    assert_eq!(v["summary"]["total"], 25);
    assert_eq!(v["summary"]["failed"], 0);
    let (code, _, _) = gpi(&["hunt", "--n", "4", "--trials", "1"]);
    assert_eq!(code, EXIT_USAGE);
}
