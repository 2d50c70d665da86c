use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const SIX_CLAUSE: &str = "c six clauses\np cnf 6 6\n1 -3 0\n-1 2 4 0\n-3 5 0\n-3 -4 5 0\n-2 4 6 0\n5 0\n";

fn spsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spsat")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spsat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn parse_clauses(text: &str) -> Vec<Vec<i64>> {
    text.lines()
        .filter(|l| !l.starts_with('c') && !l.starts_with('p') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).take_while(|&x| x != 0).collect())
        .collect()
}

fn satisfied(clauses: &[Vec<i64>], values: &[Value]) -> bool {
    clauses.iter().all(|c| c.iter().any(|&l| values[l.unsigned_abs() as usize - 1].as_bool().unwrap() == (l > 0)))
}

#[test]
fn oracle_count() {
    let path = write_temp("six.cnf", SIX_CLAUSE);
    let out = spsat(&["oracle", "--dimacs", path.to_str().unwrap(), "--count"]);
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(json(&out), serde_json::json!({ "count": 17 }));
}

#[test]
fn oracle_queries() {
    let path = write_temp("pair.cnf", "p cnf 2 2\n1 2 0\n-1 -2 0\n");
    let p = path.to_str().unwrap();
    let clusters = json(&spsat(&["oracle", "--dimacs", p, "--clusters"]));
    assert_eq!(clusters["cluster_count"], 2);
    let marginals = json(&spsat(&["oracle", "--dimacs", p, "--marginals"]));
    assert_eq!(marginals["mu"], serde_json::json!([0.5, 0.5]));
    let backbone = json(&spsat(&["oracle", "--dimacs", p, "--backbone"]));
    assert_eq!(backbone["backbone"], serde_json::json!(["FREE", "FREE"]));

    let unsat = write_temp("unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let out = spsat(&["oracle", "--dimacs", unsat.to_str().unwrap(), "--marginals"]);
    assert_eq!(out.status.code(), Some(20));

    let out = spsat(&["oracle", "--dimacs", p, "--count", "--clusters"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn sid_on_sat_instance() {
    let generated = spsat(&["gen", "--n", "400", "--alpha", "3.0", "--seed", "5"]);
    assert_eq!(generated.status.code(), Some(0));
    let text = String::from_utf8(generated.stdout).unwrap();
    let path = write_temp("gen400.cnf", &text);
    let trace = path.with_extension("csv");
    let out = spsat(&["sid", "--dimacs", path.to_str().unwrap(), "--seed", "7", "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(10));
    let v = json(&out);
    assert_eq!(v["status"], "SAT");
    assert!(satisfied(&parse_clauses(&text), v["assignment"].as_array().unwrap()));
    let rows = std::fs::read_to_string(trace).unwrap().lines().count() - 1;
    assert_eq!(rows as u64, v["rounds"].as_u64().unwrap());
    assert_eq!(v["sigma_trace"].as_array().unwrap().len(), rows);
}

#[test]
fn generator_flags_match_dimacs_input() {
    let text = String::from_utf8(spsat(&["gen", "--n", "300", "--m", "900", "--seed", "3"]).stdout).unwrap();
    let path = write_temp("gen300.cnf", &text);
    let from_file = spsat(&["sp", "--dimacs", path.to_str().unwrap(), "--seed", "3"]);
    let from_flags = spsat(&["sp", "--n", "300", "--m", "900", "--seed", "3"]);
    assert_eq!(from_file.stdout, from_flags.stdout);
    assert_eq!(text.lines().next(), Some("p cnf 300 900"));
}

#[test]
fn sp_trivial_below_threshold() {
    let out = spsat(&["sp", "--n", "50000", "--alpha", "3.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "CONVERGED");
    assert!(v["max_eta"].as_f64().unwrap() < 1e-3);
    assert_eq!(v["trivial"], true);
}

#[test]
fn wp_and_bp_on_chain() {
    let path = write_temp("chain.cnf", "p cnf 2 2\n1 0\n-1 2 0\n");
    let p = path.to_str().unwrap();
    let wp = json(&spsat(&["wp", "--dimacs", p]));
    assert_eq!(wp["H"], serde_json::json!([1, 1]));
    assert_eq!(wp["c"], serde_json::json!([0, 0]));
    assert_eq!(wp["u_nonzero_count"], 2);
    let wid = spsat(&["wp", "--dimacs", p, "--decimate"]);
    assert_eq!(wid.status.code(), Some(10));
    assert_eq!(json(&wid)["assignment"], serde_json::json!([true, true]));
    let bp = json(&spsat(&["bp", "--dimacs", p, "--eps", "1e-12"]));
    assert_eq!(bp["mu"], serde_json::json!([1.0, 1.0]));
    assert!(bp["S"].as_f64().unwrap().abs() < 1e-12);
    assert!((bp["count"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn wp_reports_contradiction() {
    let path = write_temp("contra.cnf", "p cnf 2 3\n1 0\n-1 2 0\n-2 0\n");
    let out = spsat(&["wp", "--dimacs", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(20));
    let out = spsat(&["sid", "--dimacs", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(20));
    assert_eq!(json(&out)["status"], "PROBABLY_UNSAT");
}

#[test]
fn unconverged_exit_code() {
    let out = spsat(&["sp", "--n", "2000", "--alpha", "4.2", "--tmax", "1", "--eps", "1e-300"]);
    assert_eq!(out.status.code(), Some(30));
    assert_eq!(json(&out)["status"], "UNCONVERGED");
}

#[test]
fn walksat_command() {
    let out = spsat(&["walksat", "--n", "500", "--alpha", "3.0", "--seed", "2", "--flips", "100000"]);
    assert_eq!(out.status.code(), Some(10));
    let v = json(&out);
    assert_eq!(v["best_cost_seen"], 0);
    let unsat = write_temp("unsat1.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let out = spsat(&["walksat", "--dimacs", unsat.to_str().unwrap(), "--flips", "100"]);
    assert_eq!(out.status.code(), Some(30));
}

#[test]
fn deterministic_output() {
    let args = ["sid", "--n", "500", "--alpha", "4.0", "--seed", "9"];
    assert_eq!(spsat(&args).stdout, spsat(&args).stdout);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(spsat(&["sid"]).status.code(), Some(64));
    assert_eq!(spsat(&["sid", "--n", "10", "--alpha", "3", "--m", "4"]).status.code(), Some(64));
    assert_eq!(spsat(&["bp", "--dimacs", "/nonexistent/x.cnf"]).status.code(), Some(64));
    assert_eq!(spsat(&["frobnicate"]).status.code(), Some(64));
    let bad = write_temp("bad.cnf", "p cnf 2 1\n1 3 0\n");
    assert_eq!(spsat(&["sp", "--dimacs", bad.to_str().unwrap()]).status.code(), Some(64));
    assert_eq!(spsat(&["sid", "--n", "10", "--alpha", "3", "--f", "0"]).status.code(), Some(64));
    assert_eq!(spsat(&["--help"]).status.code(), Some(0));
}

#[test]
fn table_and_scan_csv() {
    let out = spsat(&["table", "--cell", "300,3.0,0.04", "--cell", "300,3.5,0.04", "--instances", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    let kind = headers.iter().position(|h| h == "row_kind").unwrap();
    assert_eq!(rows.iter().filter(|r| &r[kind] == "aggregate").count(), 2);
    let timing = headers.iter().position(|h| h == "wall_time_s").unwrap();
    assert!(rows.iter().all(|r| r[timing].is_empty()));

    let out =
        spsat(&["scan", "--n", "500", "--alpha-start", "3.0", "--alpha-end", "2.0", "--step", "100", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    let out = spsat(&["scan", "--n", "500", "--alpha-start", "2.0", "--alpha-end", "3.0", "--step", "100"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn table_is_independent_of_worker_count() {
    let args = ["table", "--cell", "300,3.8,0.04", "--instances", "4", "--base-seed", "20"];
    let serial = Command::new(env!("CARGO_BIN_EXE_spsat")).args(args).env("SPSAT_WORKERS", "1").output().unwrap();
    let parallel = Command::new(env!("CARGO_BIN_EXE_spsat")).args(args).env("SPSAT_WORKERS", "4").output().unwrap();
    assert_eq!(serial.status.code(), Some(0));
    assert_eq!(serial.stdout, parallel.stdout);
}
