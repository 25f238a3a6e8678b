use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sepness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepness")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_of(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CYCLE: &str = r#"{"n_sites":5,"edges":[[1,2,1.0],[2,3,2.0],[3,4,0.5],[4,5,1.0],[5,1,0.8],[2,4,1.3]],
"omega_left":0.7,"omega_right":2.5,"rho_left":0.2,"rho_right":0.8}"#;

#[test]
fn exact_segment_report() {
    let r = json_of(&sepness(&["exact", "--segment", "3", "--rho-l", "0.2", "--rho-r", "0.8"]));
    assert_eq!(r["command"], "exact");
    assert_eq!(r["pass"], true);
    assert!(r["residuals"]["max_deviation"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["graph_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["invocation"][1], "exact");
    assert_eq!(r["results"]["stationary"]["probabilities"].as_array().unwrap().len(), 4);
    let weights = r["results"]["mixture_weights"]["weights"].as_array().unwrap();
    assert_eq!(weights.len(), 4);
    assert!(weights.iter().all(|w| w["F"].as_f64().unwrap() > 0.0));
}

#[test]
fn single_bulk_site_is_two_lines() {
    let o = sepness(&["exact", "--bulk-sites", "1", "--rho-l", "0.2", "--rho-r", "0.8", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "config_bits,probability");
    assert_eq!(lines.len(), 3);
    for (i, line) in lines[1..].iter().enumerate() {
        let (bits, p) = line.split_once(',').unwrap();
        assert_eq!(bits, i.to_string());
        assert!((p.parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn weights_csv() {
    let o = sepness(&["exact", "--segment", "3", "--format", "csv", "--table", "weights"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "sites,F\n,0.16666666666666666\n1,0.16666666666666666\n2,0.5\n1;2,0.16666666666666666\n");
}

#[test]
fn graph_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "cycle.json", CYCLE);
    let out = dir.path().join("report.json");
    let o = sepness(&["exact", "--graph", &g, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(r["residuals"]["max_deviation"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["params"]["graph"]["n_sites"], 5);
}

#[test]
fn disconnected_graph_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "split.json",
        r#"{"n_sites":4,"edges":[[1,2,1.0],[3,4,1.0]],"omega_left":1,"omega_right":1,"rho_left":0.2,"rho_right":0.8}"#,
    );
    let o = sepness(&["exact", "--graph", &g]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not connected"));
}

#[test]
fn input_errors_exit_one() {
    for args in [
        vec!["exact", "--segment", "1"],
        vec!["exact"],
        vec!["exact", "--segment", "3", "--bulk-sites", "2"],
        vec!["exact", "--segment", "3", "--rho-l", "1.5"],
        vec!["exact", "--segment", "3", "--abgd", "1,2,3"],
        vec!["exact", "--graph", "/nonexistent/graph.json"],
        vec!["absorption", "--segment", "3", "--sites", "1,5"],
        vec!["absorption", "--segment", "3", "--sites", "2,1"],
        vec!["correlations", "--segment", "4", "--points", "3,2"],
        vec!["simulate", "--mode", "dual", "--segment", "4"],
        vec!["simulate", "--mode", "bogus", "--segment", "4"],
        vec!["simulate", "--mode", "ninja", "--segment", "4", "--sites", "1"],
        vec!["simulate", "--mode", "ninja", "--segment", "4", "--sites", "1", "--ninja", "3", "--omega-l", "2"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&sepness(&args)), 1, "{args:?}");
    }
}

#[test]
fn capacity_exits_two() {
    let o = sepness(&["exact", "--segment", "22"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
}

#[test]
fn failed_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "cycle.json", CYCLE);
    let o = sepness(&["exact", "--graph", &g, "--tolerance", "1e-300"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_deviation"));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pass"], false);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&sepness(&["--help"])), 0);
    assert_eq!(code(&sepness(&["simulate", "--help"])), 0);
}

#[test]
fn absorption_levels_and_all_at_n() {
    let r = json_of(&sepness(&["absorption", "--segment", "3", "--sites", "1,2"]));
    let levels: Vec<f64> = r["results"]["levels"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in levels.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
        assert!((got - want).abs() < 1e-14);
    }
    assert!(r["results"]["max_discrepancy"].as_f64().unwrap() < 1e-12);
    let r = json_of(&sepness(&["absorption", "--segment", "3", "--sites", "1,2", "--only", "all-at-n"]));
    assert!((r["results"]["all_at_n"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn absorption_on_graph_uses_oracle_only() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "cycle.json", CYCLE);
    let r = json_of(&sepness(&["absorption", "--graph", &g, "--sites", "2,4"]));
    assert!(r["results"]["closed_form"].is_null());
    let total: f64 = r["results"]["oracle"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn correlations() {
    let r = json_of(&sepness(&["correlations", "--segment", "3", "--points", "1,2", "--centered"]));
    assert!((r["results"]["value"].as_f64().unwrap() + 0.02).abs() < 1e-15);
    let r = json_of(&sepness(&["correlations", "--segment", "4", "--points", "1"]));
    assert!((r["results"]["value"].as_f64().unwrap() - (0.2 + 0.6 / 4.0)).abs() < 1e-15);
    let r = json_of(&sepness(&["correlations", "--segment", "5", "--points", "1,3", "--check"]));
    assert!(r["results"]["discrepancy"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["pass"], true);
}

#[test]
fn abgd_parametrization() {
    // alpha = rho_L / omega_L and so on, with omega = 1/2 on both sides
    let r = json_of(&sepness(&["correlations", "--segment", "3", "--points", "1", "--abgd", "0.4,0.4,1.6,1.6"]));
    let g = &r["params"]["graph"];
    assert!((g["rho_left"].as_f64().unwrap() - 0.2).abs() < 1e-15);
    assert!((g["rho_right"].as_f64().unwrap() - 0.8).abs() < 1e-15);
    assert!((g["omega_left"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn simulate_dual_is_reproducible() {
    let args = ["simulate", "--mode", "dual", "--segment", "4", "--sites", "2", "--replicas", "100000", "--seed", "7"];
    let a = sepness(&args);
    let r = json_of(&a);
    let at_n = &r["results"]["all_at_n"];
    assert!(at_n["z"].as_f64().unwrap() <= 4.0);
    assert_eq!(at_n["reference"].as_f64().unwrap(), 0.5);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["params"]["rng"], sepness_core::sim::RNG_ALGORITHM);
    let b = Command::new(env!("CARGO_BIN_EXE_sepness")).args(args).env("SEPNESS_THREADS", "1").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_stirring_table() {
    let o = sepness(&["simulate", "--mode", "stirring", "--segment", "3", "--replicas", "200000", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sites,F_hat,stderr,n,F"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (mean, stderr, exact): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[4].parse().unwrap());
        assert!((mean - exact).abs() <= 4.0 * stderr, "{line}");
    }
}

#[test]
fn simulate_ninja_conditional() {
    let r = json_of(&sepness(&["simulate", "--mode", "ninja", "--segment-n", "4", "--sites", "1", "--ninja", "3", "--replicas", "200000"]));
    let c = &r["results"]["ninja_at_zero_given_labels_at_n"];
    assert_eq!(c["reference"].as_f64().unwrap(), 0.5);
    assert!(c["z"].as_f64().unwrap() <= 4.0);
    assert!(r["results"]["label_forgetting_chi_square"]["p_value"].as_f64().unwrap() >= 0.01);
}

#[test]
fn simulate_sep_with_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let r = json_of(&sepness(&[
        "simulate", "--mode", "sep", "--segment", "4", "--t-max", "2000", "--observe", "1,2", "--observe", "3", "--events", log.to_str().unwrap(),
    ]));
    assert_eq!(r["params"]["burn_in"].as_f64().unwrap(), 400.0);
    let obs = r["results"]["observables"].as_array().unwrap();
    assert_eq!(obs.len(), 2);
    assert_eq!(obs[0]["n"], 20);
    let text = std::fs::read_to_string(log).unwrap();
    assert!(text.starts_with("time,event_type,site_from,site_to\n"));
    assert_eq!(text.lines().count() as u64, r["results"]["events"].as_u64().unwrap() + 1);
}

#[test]
fn verify_martingales_and_ninja() {
    let r = json_of(&sepness(&["verify", "--suite", "martingales", "--segment-n", "5"]));
    assert_eq!(r["pass"], true);
    let checks = r["results"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|c| c["value"].as_f64().unwrap() < 1e-12));
    let r = json_of(&sepness(&["verify", "--suite", "ninja", "--max-n", "7"]));
    assert_eq!(r["pass"], true);
}

#[test]
fn verify_all_is_deterministic() {
    let a = sepness(&["verify", "--suite", "all", "--seed", "3"]);
    let r = json_of(&a);
    assert_eq!(r["pass"], true);
    let b = sepness(&["verify", "--suite", "all", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}
