use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

const DELTA0: &str = r#"{"dim":1,"points":[[0.0]],"weights":[1.0]}"#;
const DELTA1: &str = r#"{"dim":1,"points":[[1.0]],"weights":[1.0]}"#;
const SPREAD: &str = r#"{"dim":1,"points":[[-1.0],[1.0]],"weights":[0.5,0.5]}"#;

fn wotlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wotlab")).args(args).output().expect("run wotlab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn check_order_accepts_a_martingale_spread() {
    let out = wotlab(&["check-order", DELTA0, SPREAD]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "wotlab/1");
    assert_eq!(v["verdict"], true);
    assert_eq!(v["revalidated"], true);
    assert!(v["certificate"]["witness_kernel"].is_object());
}

#[test]
fn check_order_rejects_with_a_separating_function() {
    let out = wotlab(&["check-order", DELTA1, DELTA0]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["verdict"], false);
    assert_eq!(v["revalidated"], true);
    // A shift to the left is still icx-dominated in the other direction.
    assert_eq!(wotlab(&["check-order", DELTA0, DELTA1, "--order", "icx"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(wotlab(&["bogus"]).status.code(), Some(2));
    assert_eq!(wotlab(&["solve", "no_such_instance"]).status.code(), Some(2));
    assert_eq!(wotlab(&["check-order", DELTA0, SPREAD, "--order", "upward"]).status.code(), Some(2));
    assert_eq!(wotlab(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn solve_reports_the_converse_gap() {
    let out = wotlab(&["solve", "converse_gap"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((num(&v["primal"]["value"]) - 1.0).abs() <= 1e-6);
    assert!(num(&v["dual"]["value"]) <= 1e-8);
    assert!(num(&v["gap"]) >= 1.0 - 1e-6);
}

#[test]
fn solve_closes_the_gap_on_bundled_scenarios() {
    for name in ["strassen_feasible", "kr_1d", "monopolist", "martingale_benamou_brenier"] {
        let out = wotlab(&["solve", name]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let v = json(&out);
        let p = num(&v["primal"]["value"]);
        assert!(num(&v["gap"]).abs() <= 1e-5 * (1.0 + p.abs()), "{name}: {v}");
    }
    let v = json(&wotlab(&["solve", "kr_1d", "--side", "primal"]));
    assert!(v["dual"].is_null());
    assert!((num(&v["primal"]["value"]) - 0.5).abs() <= 1e-9);
}

#[test]
fn project_brenier_strassen() {
    let out = wotlab(&["project", "brenier_strassen"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["result"];
    for side in ["lhs", "mid", "rhs"] {
        assert!((num(&r["three_values"][side]) - 4.0).abs() <= 1e-6, "{side}");
    }
    assert_eq!(r["eta"]["points"], serde_json::json!([[0.0]]));
    assert_eq!(v["agree"], true);
}

#[test]
fn identical_marginals_cost_nothing() {
    let v = json(&wotlab(&["project", "identical_marginals"]));
    for side in ["lhs", "mid", "rhs"] {
        assert!(num(&v["result"]["three_values"][side]).abs() <= 1e-8);
    }
}

#[test]
fn table_output_and_out_file() {
    let out = wotlab(&["solve", "kr_1d", "--format", "table"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("primal.value"));
    let path = std::env::temp_dir().join(format!("wotlab-cli-test-{}.json", std::process::id()));
    let path_str = path.to_string_lossy().to_string();
    let out = wotlab(&["solve", "kr_1d", "--out", &path_str]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "solve");
    std::fs::remove_file(path).unwrap();
}

#[test]
fn reports_are_deterministic() {
    let a = wotlab(&["project", "icx_projection"]).stdout;
    let b = wotlab(&["project", "icx_projection"]).stdout;
    assert_eq!(a, b);
    let a = wotlab(&["verify", "--suite", "orders", "--n", "5", "--seed", "3"]).stdout;
    let b = wotlab(&["verify", "--suite", "orders", "--n", "5", "--seed", "3"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn quick_verify_pass() {
    let start = Instant::now();
    let out = wotlab(&["verify", "--suite", "all", "--n", "1"]);
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], v["total"]);
}

#[test]
fn scenarios_are_listed() {
    let out = wotlab(&["scenarios"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("brenier_strassen") && text.contains("converse_gap"));
}
