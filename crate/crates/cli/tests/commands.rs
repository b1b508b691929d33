use std::fs;
use std::process::{Command, Output};

fn etsmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etsmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn condition_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = etsmc(&[
        "condition",
        "--preset",
        "example1",
        "--deltas",
        "1e-4,2.5e-5",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("conditioning.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "delta,kind,sigma1,sigma2,sigma3,sigma4,rank,rank_fixed,condition"
    );
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with(",continuous,7"));
    assert!(lines[2].starts_with("0.0001,shift,2.0000000"));
    assert!(lines[3].starts_with("0.0001,delta,7.0003"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("conditioning.json")).unwrap())
            .unwrap();
    assert_eq!(json["periods"].as_array().unwrap().len(), 2);
}

#[test]
fn condition_strict_flags_rank_loss() {
    let o = etsmc(&[
        "condition",
        "--preset",
        "example1",
        "--deltas",
        "1e-5",
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("rank-deficient"));
}

#[test]
fn condition_needs_periods() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&etsmc::scenario::ScenarioConfig::example1().to_json()).unwrap();
    cfg["deltas"] = serde_json::json!([]);
    let path = dir.path().join("cfg.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = etsmc(&["condition", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        etsmc(&["condition", "--preset", "example1", "--deltas", ""])
            .status
            .code()
            == Some(2)
    );
}

#[test]
fn identity_plant_is_perfectly_conditioned() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&etsmc::scenario::ScenarioConfig::example1().to_json()).unwrap();
    cfg["plant"] = serde_json::json!({
        "a": [[0.0, 1.0], [0.0, 0.0]],
        "b": [[0.0], [1.0]],
        "c": [[1.0, 0.0], [0.0, 1.0]],
        "d0": 0.0
    });
    cfg["c"] = serde_json::json!([1.0, 1.0]);
    cfg["x0"] = serde_json::json!([0.0, 0.0]);
    cfg["n_fast"] = serde_json::json!(1);
    let path = dir.path().join("identity.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = etsmc(&[
        "condition",
        "--config",
        path.to_str().unwrap(),
        "--deltas",
        "1e-3",
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",1,1,2,2,1"), "{csv}");
    }
}

#[test]
fn design_reports_bands() {
    let o = etsmc(&["design", "--preset", "example1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["omega1"].as_f64().unwrap() - 0.0286).abs() <= 1e-3);
    for key in ["omega", "theta1", "theta2", "d_m", "f_m", "l_m"] {
        assert!(r[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(r["feasible"], true);
}

#[test]
fn design_names_violated_inequality() {
    let o = etsmc(&["design", "--preset", "example2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("epsilon ≤ d_m+f_m+alpha"));
    let strict = etsmc(&["design", "--preset", "example2", "--strict"]);
    assert_eq!(strict.status.code(), Some(3));
    assert!(stderr(&strict).contains("epsilon ≤ d_m+f_m+alpha"));
}

#[test]
fn usage_errors() {
    assert_eq!(etsmc(&["design"]).status.code(), Some(2));
    assert_eq!(
        etsmc(&["design", "--preset", "example9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        etsmc(&["simulate", "--preset", "example1", "--horizon", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        etsmc(&["simulate", "--preset", "example1", "--mode", "sometimes"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(etsmc(&["frobnicate"]).status.code(), Some(2));
    let o = etsmc(&["design", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "simulate",
        "--preset",
        "example2",
        "--horizon",
        "5",
        "--out",
        out,
    ];
    let o = etsmc(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["periodic_count"], 500);
    for key in [
        "band_entry_s",
        "omega1",
        "trigger_count",
        "max_gap_s",
        "max_gap_steps",
        "sup_abs_s_after_entry",
    ] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,x1,x2,x3,xhat1,xhat2,xhat3,s,sbar,u,d,trigger"
    );
    assert_eq!(csv.lines().count(), 502);
    // deterministic
    let again = etsmc(&args);
    assert_eq!(again.stdout, o.stdout);
    assert_eq!(
        fs::read_to_string(dir.path().join("trace.csv")).unwrap(),
        csv
    );
}

#[test]
fn simulate_periodic_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = etsmc(&[
        "simulate", "--preset", "example1", "--mode", "periodic", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["periodic_count"], 600000);
    assert_eq!(summary["trigger_count"], 600000);
}

#[test]
fn simulate_strict_refuses_infeasible_gain() {
    let dir = tempfile::tempdir().unwrap();
    let o = etsmc(&[
        "simulate",
        "--preset",
        "example2",
        "--strict",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("trace.csv").exists());
}
