use std::process::{Command, Output};

use bessel_fpt::harness::{SweepTable, ValidationReport, CSV_HEADER, SCHEMA_VERSION};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bessel-fpt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn eval_half_order_anchor() {
    let o = run(&[
        "eval", "--nu", "0.5", "--a", "1", "--x", "2", "--t", "1", "--method", "auto",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["value"].as_f64().unwrap() - 0.1209854).abs() < 1e-7);
    assert_eq!(v["method"], "exact");
    assert!(v["regime"].is_string());
    assert!(v.get("err_bound").is_some());
}

#[test]
fn eval_recurrent_parabolic_formula_is_inner() {
    let o = run(&[
        "eval", "--nu", "0", "--a", "1", "--x", "2", "--t", "1e6", "--method", "thm3",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["regime"], "inner");
    assert_eq!(v["method"], "thm3");
}

#[test]
fn eval_exit_codes() {
    let o = run(&["eval", "--nu", "0.5", "--a", "1", "--x", "0.5", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = run(&[
        "eval", "--nu", "0.5", "--a", "1", "--x", "2", "--t", "1", "--method", "nope",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "eval",
        "--nu",
        "0.5",
        "--a",
        "1",
        "--x",
        "4",
        "--t",
        "0.05",
        "--method",
        "inversion-gs",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = run(&["eval", "--nu", "0.5", "--a", "1", "--x", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_distribution_and_negative_order() {
    let o = run(&[
        "eval", "--nu", "-0.5", "--a", "1", "--x", "2", "--t", "1", "--dist",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["quantity"], "distribution");
    let p = v["value"].as_f64().unwrap();
    assert!((p - 0.3173105078629141).abs() < 1e-12, "{p}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# monte carlo\nseed = 11\npaths = 3000\nnu = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let base = [
        "eval", "--a", "1", "--x", "2", "--t", "1", "--method", "mc", "--dist",
    ];
    let from_file = json(&run(&[&base[..], &["--config", c]].concat()));
    let from_flags = json(&run(&[
        &base[..],
        &["--nu", "1", "--seed", "11", "--paths", "3000"],
    ]
    .concat()));
    assert_eq!(from_file, from_flags);
    let overridden = json(&run(&[&base[..], &["--config", c, "--seed", "12"]].concat()));
    assert_ne!(overridden["value"], from_file["value"]);
    let o = run(&[
        "eval",
        "--config",
        dir.path().join("missing").to_str().unwrap(),
        "--nu",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mc_eval_is_deterministic() {
    let args = [
        "eval", "--nu", "0", "--a", "1", "--x", "1.5", "--t", "1", "--method", "mc", "--paths",
        "4000",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn validate_unknown_suite() {
    let o = run(&["validate", "everything"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_anchors_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let start = std::time::Instant::now();
    let o = run(&["validate", "anchors", "--out", out.to_str().unwrap()]);
    assert!(start.elapsed().as_secs() < 60);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("== anchor.d1"));
    let r: ValidationReport =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.suite, "anchors");
    assert_eq!(r.schema_version, SCHEMA_VERSION);
    assert_eq!(r.wall_time_s, None);
    assert_eq!(r.summary.pass + r.summary.fail, r.checks.len());
    // Only the real-axis inversion misses its tolerance in this suite.
    for c in r.checks.iter().filter(|c| !c.pass) {
        assert_eq!(c.note.as_deref(), Some("gaver-stehfest"), "{c:?}");
    }
    assert_eq!(o.status.code(), Some(if r.all_pass() { 0 } else { 1 }));
}

#[test]
fn validate_tolerance_override_and_timing() {
    let o = run(&[
        "validate", "oracles", "--format", "json", "--timing", "--tol", "mass=-1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r: ValidationReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.wall_time_s.is_some());
    assert!(r
        .checks
        .iter()
        .filter(|c| c.group == "mass")
        .all(|c| !c.pass && c.tolerance == -1.0));
    assert!(r
        .checks
        .iter()
        .filter(|c| c.group != "mass")
        .all(|c| c.pass));
    assert_eq!(
        run(&["validate", "oracles", "--tol", "mass"]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_empty_grid() {
    let o = run(&["sweep", "--x-grid", ""]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["sweep", "--t-grid", "2,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_csv_convergence_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("band.csv");
    let o = run(&[
        "sweep",
        "--orders",
        "1",
        "--x-grid",
        "2",
        "--x-scale",
        "sqrt-t",
        "--t-grid",
        "log:1e2:1e4:3",
        "--methods",
        "thm3,inversion-bromwich",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let ratios: Vec<f64> = lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[5] == "thm3")
        .map(|f| f[10].parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    assert!(
        ratios
            .windows(2)
            .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()),
        "{ratios:?}"
    );
    assert!((ratios[2] - 1.0).abs() < 0.05);
}

#[test]
fn sweep_json_round_trip() {
    let o = run(&[
        "sweep",
        "--orders",
        "0.5,2",
        "--x-grid",
        "1.5,3",
        "--t-grid",
        "1,4",
        "--methods",
        "thm3,inversion-gs",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let t = SweepTable::from_json(&text).unwrap();
    assert_eq!(t.rows.len(), 16);
    assert_eq!(t.to_json(), text);
}

#[test]
fn sweep_all_rows_failing() {
    let o = run(&["sweep", "--orders", "0.5", "--methods", "thm1"]);
    assert_ne!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(row[7].is_empty() && !row[11].is_empty(), "{row:?}");
}
