//! The command-line tool: exit codes, report shape and determinism.

use std::path::PathBuf;
use std::process::Command;

use redspider::cli::run_command;
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("redspider-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_redspider")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn result(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout).unwrap();
    v["result"].clone()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["no-such-command"]).0, 1);
    assert_eq!(run(&["grid", "--t", "0", "--tprime", "2"]).0, 1);
    assert_eq!(run(&["simulate", "--machine", "/nonexistent/machine.json"]).0, 2);
    assert_eq!(run(&["simulate", "--machine", &fixture("delta_halt.json")]).0, 0);
    assert_eq!(run(&["simulate", "--machine", &fixture("delta_loop.json"), "--budget", "50"]).0, 3);
}

#[test]
fn malformed_input_is_an_input_error() {
    let p = scratch("bad.json");
    std::fs::write(&p, "{ not json").unwrap();
    let (code, _, err) = run(&["simulate", "--machine", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn simulate_reports_the_halting_step() {
    let (code, out, _) = run(&["simulate", "--machine", &fixture("delta_halt.json")]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tool"], "redspider");
    assert!(v["inputs"].as_object().unwrap().values().all(|d| d.as_str().unwrap().len() == 64));
    assert_eq!(v["result"]["k"], 1);
}

#[test]
fn separation_demo_finds_the_pattern() {
    let o = run_command(["separation-demo", "--t", "2", "--tprime", "3"]).unwrap();
    assert_eq!(o.code, 0);
    let r = result(&o.output);
    assert_eq!(r["pattern_found"], true);
    assert!(!r["path_words"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_deterministic_without_timing() {
    let args = ["grid", "--t", "1", "--tprime", "3"];
    let a = run_command(args).unwrap().output;
    let b = run_command(args).unwrap().output;
    assert_eq!(a, b);
    assert!(!a.contains("timing_ms"));
    let timed = run_command(["--timing", "grid", "--t", "1", "--tprime", "2"]).unwrap().output;
    assert!(timed.contains("timing_ms"));
}

#[test]
fn out_flag_writes_the_report() {
    let p = scratch("truncate.json");
    let o = run_command(["--out", p.to_str().unwrap(), "truncate-M", "--n", "4"]).unwrap();
    assert_eq!(o.code, 0);
    let written = std::fs::read_to_string(&p).unwrap();
    assert_eq!(written, o.output);
    assert_eq!(result(&written)["foam"]["item1"].as_array().map(Vec::len), Some(0));
}

#[test]
fn finite_model_saves_a_graph_that_exports_to_dot() {
    let g = scratch("model.json");
    let o = run_command([
        "finite-model",
        "--machine",
        &fixture("delta_halt.json"),
        "--save",
        g.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(o.code, 0, "{}", o.output);
    let dot = run_command(["export-dot", "--in", g.to_str().unwrap()]).unwrap();
    assert_eq!(dot.code, 0);
    assert!(dot.output.starts_with("digraph"));
    assert!(dot.output.contains("η11"));
}

#[test]
fn compile_rainworm_lists_rules() {
    let o = run_command(["compile-rainworm", "--machine", &fixture("delta_loop.json")]).unwrap();
    assert_eq!(o.code, 0);
    let r = result(&o.output);
    assert_eq!(r["rules"].as_array().map(Vec::len), Some(13));
}
