use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn pinchcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinchcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn unknown_flow_is_a_configuration_error() {
    let o = pinchcert(&["verify", "BADNAME"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("BADNAME"));
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        &["verify", "H3", "--samples", "0"][..],
        &["verify", "H3", "--h", "-1"],
        &["verify", "H3", "--format", "xml"],
        &["verify", "H3", "--eps-tau", "nan"],
        &["verify", "H3", "--grid", "2"],
        &[
            "verify",
            "H3",
            "--samples",
            "10",
            "--out",
            "/nonexistent/dir/r.json",
        ],
        &["frobnicate", "H3"],
    ] {
        assert_eq!(code(&pinchcert(args)), 2, "{args:?}");
    }
}

#[test]
fn verify_h3_passes_and_reports_json() {
    let o = pinchcert(&[
        "verify",
        "H3",
        "--samples",
        "20000",
        "--seed",
        "7",
        "--grid",
        "100",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], true);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["tolerances"]["tau"], 1e-9);
    assert!(v["version"].as_str().unwrap().starts_with("pinchcert v"));
    assert_eq!(v["counts"]["violations"], 0);
    assert_eq!(v["result"]["inclusions"].as_array().unwrap().len(), 6);
    assert!(stderr(&o).contains("wall time"));
}

#[test]
fn raised_threshold_exits_one_with_counterexamples() {
    let o = pinchcert(&["verify", "H3", "--h", "0.2", "--samples", "50000"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("counterexample"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["threshold_source"], "override");
    let incl = &v["result"]["inclusions"][1];
    assert!(incl["violation_count"].as_u64().unwrap() > 0);
    assert!(!incl["violations"].as_array().unwrap().is_empty());
}

#[test]
fn a2_exits_one_on_the_vanishing_check() {
    let o = pinchcert(&["verify", "A2", "--samples", "20000"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["chains_verified"], true);
    assert_eq!(v["result"]["vanishing"]["passes"], false);
}

#[test]
fn export_grid_rows() {
    let o = pinchcert(&["export", "H3", "--grid", "4"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(
        lines[0],
        "a,b,c,in_cone,in_sublevel,cert_phi,cert_psi,phi,psi,margin_worst"
    );
    assert_eq!(lines.len(), 4);
    let row = lines
        .iter()
        .find(|l| l.starts_with("0.5,0.25,0.25,"))
        .unwrap();
    let phi: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((phi - 0.125).abs() < 1e-12);

    let o = pinchcert(&["export", "K", "--grid", "3"]);
    let out = stdout(&o);
    let umbilic: Vec<_> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(umbilic[3], "1");
    assert_eq!(umbilic[4], "indeterminate");
}

#[test]
fn export_is_deterministic_under_seed() {
    let a = stdout(&pinchcert(&[
        "export",
        "K",
        "--samples",
        "500",
        "--seed",
        "4",
    ]));
    let b = stdout(&pinchcert(&[
        "export",
        "K",
        "--samples",
        "500",
        "--seed",
        "4",
        "--workers",
        "3",
    ]));
    let c = stdout(&pinchcert(&[
        "export",
        "K",
        "--samples",
        "500",
        "--seed",
        "5",
    ]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 501);
    let json = stdout(&pinchcert(&[
        "export",
        "K",
        "--samples",
        "5",
        "--format",
        "json",
    ]));
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn derive_h_prints_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = pinchcert(&[
        "derive-h",
        "H3",
        "--samples",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("H3: h = 0.125 "), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["threshold"], 0.125);
    assert_eq!(v["result"]["rule"]["rational"]["denominator"], 8);

    let o = pinchcert(&["derive-h", "K", "--samples", "20000", "--format", "csv"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("K,0.3333333333333333,"), "{line}");
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let path = out.to_str().unwrap();
    let mut reports = Vec::new();
    for workers in ["1", "4"] {
        let o = pinchcert(&[
            "verify",
            "K",
            "--samples",
            "50000",
            "--grid",
            "200",
            "--out",
            path,
            "--workers",
            workers,
        ]);
        assert_eq!(code(&o), 0);
        reports.push(fs::read(&out).unwrap());
        let meta: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("r.json.meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta["workers"].to_string(), workers);
        assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(reports[0], reports[1]);
    // Only the report and its sidecar remain.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn tolerance_overrides_are_recorded() {
    let o = pinchcert(&[
        "verify",
        "H3",
        "--samples",
        "1000",
        "--eps-tau",
        "1e-8",
        "--eps-umbilic",
        "1e-6",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["tolerances"]["tau"], 1e-8);
    assert_eq!(v["config"]["tolerances"]["eps_umbilic"], 1e-6);
}

#[test]
fn version_flag() {
    let o = pinchcert(&["--version"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("pinchcert "));
}
