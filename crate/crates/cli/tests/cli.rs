use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn boxsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxsel")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SIM: &str = r#"{
  "distribution": {"kind": "exponential", "rate": 1.0},
  "noise": {"type": "tiers", "tiers": [{"count": 5, "sigma": 0.0}, {"count": 45, "sigma": 3.0}]},
  "policies": [{"policy": "naive"}, {"policy": "ignore_large"}, {"policy": "linear_fixed", "c": 1.0}],
  "trials": 3000,
  "seed": 5,
  "benchmarks": ["prophet", "random", "opt", "best_linear_hindsight"]
}"#;

#[test]
fn order_stats_and_posterior_print_scalars() {
    let o = boxsel(&["order-stats", "--dist", "exponential", "--m", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2.08333");
    let o = boxsel(&["posterior", "--dist", "halfnormal", "--sigma", "1", "--y", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.564190");
    let o = boxsel(&["posterior", "--dist", "exponential", "--sigma", "2", "--y", "-3"]);
    assert!(o.status.success());
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(boxsel(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(boxsel(&["order-stats", "--dist", "cauchy", "--m", "4"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &SIM.replace("\"seed\": 5", "\"seed\": 5, \"sede\": 1"));
    assert_eq!(boxsel(&["simulate", &bad]).status.code(), Some(1));
    let bad = write(dir.path(), "bad2.json", &SIM.replace("\"policy\": \"naive\"", "\"policy\": \"naive\", \"c\": 2"));
    assert_eq!(boxsel(&["simulate", &bad]).status.code(), Some(1));
    assert_eq!(boxsel(&["simulate", "/nonexistent/x.json"]).status.code(), Some(1));
    assert_eq!(boxsel(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_small_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"suite": ["gordon", "order-stat-mean", "posterior-monotonicity"], "n_grid": [4, 16]}"#);
    let o = boxsel(&["verify", &cfg, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "verify");
}

#[test]
fn simulate_round_trips_through_its_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let out = dir.path().join("out");
    let o = boxsel(&["simulate", &cfg, "--format", "json", "--seed", "17", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read_to_string(out.join("simulate.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["config"]["seed"], 17);
    assert_eq!(v["seed"], 17);
    let names: Vec<&str> = v["result"]["estimates"].as_array().unwrap().iter().map(|e| e["policy"].as_str().unwrap()).collect();
    assert!(names.contains(&"prophet") && names.contains(&"best_linear_hindsight"));

    let replay = boxsel(&["simulate", out.join("simulate.json").to_str().unwrap(), "--format", "json"]);
    assert!(replay.status.success());
    assert_eq!(stdout(&replay), first);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let a = boxsel(&["simulate", &cfg, "--format", "json", "--threads", "1"]);
    let b = boxsel(&["simulate", &cfg, "--format", "json", "--threads", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn trace_and_csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", &SIM.replace("3000", "10"));
    let trace = dir.path().join("t.csv");
    let o = boxsel(&["simulate", &cfg, "--format", "csv", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let t = fs::read_to_string(&trace).unwrap();
    let mut lines = t.lines();
    assert_eq!(lines.next().unwrap(), "trial,policy,choice,reward");
    let rows: Vec<_> = lines.collect();
    assert!(rows.len() >= 10 * 3);
    for r in rows {
        let k: usize = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!((1..=50).contains(&k));
    }
    assert!(stdout(&o).contains("naive"));
}

#[test]
fn construct_reports_tiers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"distribution": {"kind": "exponential", "rate": 1.0}, "n": 1000}"#);
    let o = boxsel(&["construct", "naive-adversary", &cfg, "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let tiers = &v["result"]["construction"]["tiers"];
    assert_eq!(tiers[0][0], 959);
    assert_eq!(tiers[1][0], 41);
    let small = write(dir.path(), "s.json", r#"{"distribution": {"kind": "exponential", "rate": 1.0}, "n": 10}"#);
    assert_ne!(boxsel(&["construct", "naive-adversary", &small]).status.code(), Some(0));
}
