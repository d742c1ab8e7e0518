//! Runs the `nacc` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bench(name: &str) -> PathBuf {
    root().join("benchmarks").join(format!("{name}.qasm"))
}

fn nacc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nacc"))
        .args(args)
        .env_remove("NACC_MACHINE")
        .output()
        .expect("binary runs")
}

fn compile(input: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["compile", "--input", input.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = nacc(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schema").join(name)).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn fredkin_defaults_have_no_swaps_and_match_the_schema() {
    let r = compile(&bench("fredkin"), &[]);
    assert_eq!(r["swap_count"], 0);
    assert_eq!(r["cz_count_total"], r["cz_count"]);
    assert_eq!(r["strategy"], "parallax");
    assert_eq!(r["machine"], "quera256");
    let v = schema("compile_report.schema.json");
    assert!(v.is_valid(&r), "{:?}", v.iter_errors(&r).map(|e| e.to_string()).collect::<Vec<_>>());
    let timed = compile(&bench("fredkin"), &["--timing"]);
    assert!(timed["compile_time_ms"].as_f64().unwrap() >= 0.0);
    assert!(v.is_valid(&timed));
}

#[test]
fn baseline_pays_three_czs_per_swap() {
    let r = compile(&bench("adv_9"), &["--strategy", "swap-baseline"]);
    let swaps = r["swap_count"].as_u64().unwrap();
    assert!(swaps > 0);
    assert_eq!(r["cz_count_total"].as_u64().unwrap(), r["cz_count"].as_u64().unwrap() + 3 * swaps);
    assert!(schema("compile_report.schema.json").is_valid(&r));
}

#[test]
fn twenty_aod_pairs_are_no_slower_than_one() {
    let one = compile(&bench("qft_6"), &["--aod-count", "1"]);
    let twenty = compile(&bench("qft_6"), &["--aod-count", "20"]);
    assert!(twenty["circuit_runtime_us"].as_f64().unwrap() <= one["circuit_runtime_us"].as_f64().unwrap());
    assert_eq!(one["aod_count_used"], 1);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = bench("qaoa_8");
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let o = nacc(&["compile", "--input", input.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        files.push(std::fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let other = nacc(&["compile", "--input", input.to_str().unwrap(), "--seed", "8"]);
    assert!(other.status.success());
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    // usage
    assert_eq!(code(&nacc(&["compile"])), 2);
    assert_eq!(code(&nacc(&["compile", "--input", "x.qasm", "--aod-count", "0"])), 2);
    // missing file
    let missing = nacc(&["compile", "--input", dir.path().join("none.qasm").to_str().unwrap()]);
    assert_eq!(code(&missing), 3);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
    // malformed QASM
    let bad = dir.path().join("bad.qasm");
    std::fs::write(&bad, "OPENQASM 2.0;\nqreg q[2];\ncx q[0] q[1];\n").unwrap();
    let out = nacc(&["compile", "--input", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("at 3:9"));
    // invalid configuration
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[hardware]\ncz_error = 2.0\n").unwrap();
    let out = nacc(&["compile", "--input", bench("ghz_8").to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 5);
    // more qubits than sites
    let big = dir.path().join("big.qasm");
    std::fs::write(&big, "OPENQASM 2.0;\nqreg q[300];\ncz q[0],q[299];\n").unwrap();
    assert_eq!(code(&nacc(&["compile", "--input", big.to_str().unwrap()])), 6);
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, svg, sched) = (dir.path().join("t.jsonl"), dir.path().join("t.svg"), dir.path().join("s.json"));
    let o = nacc(&[
        "compile",
        "--input",
        bench("fredkin").to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--trace-svg",
        svg.to_str().unwrap(),
        "--schedule-out",
        sched.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v = schema("trace_event.schema.json");
    let lines: Vec<Value> = std::fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| v.is_valid(l)));
    assert!(lines.iter().any(|l| l["kind"] == "homing"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&sched).unwrap()).unwrap();
    assert_eq!(s["swap_count"], 0);
}

#[test]
fn placement_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("p.json");
    let a = compile(&bench("qaoa_8"), &["--placement-cache", cache.to_str().unwrap()]);
    assert!(cache.exists());
    let b = compile(&bench("qaoa_8"), &["--placement-cache", cache.to_str().unwrap()]);
    assert_eq!(a, b);
}

#[test]
fn machine_comes_from_flag_env_or_default() {
    assert_eq!(compile(&bench("ghz_8"), &["--machine", "atom1225"])["machine"], "atom1225");
    let out = Command::new(env!("CARGO_BIN_EXE_nacc"))
        .args(["compile", "--input", bench("ghz_8").to_str().unwrap()])
        .env("NACC_MACHINE", "atom1225")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["machine"], "atom1225");
    assert!(r["parallel"]["copies"].as_u64().unwrap() > compile(&bench("ghz_8"), &[])["parallel"]["copies"].as_u64().unwrap());
}

#[test]
fn config_file_and_flags_stack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "aod_count = 1\nhoming = true\n").unwrap();
    let r = compile(&bench("adv_9"), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(r["aod_count_used"], 1);
    let r = compile(&bench("adv_9"), &["--config", cfg.to_str().unwrap(), "--aod-count", "20", "--no-homing"]);
    assert!(r["aod_count_used"].as_u64().unwrap() > 1);
    assert_eq!(r["homing"], false);
}

#[test]
fn summarize_compares_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for strategy in ["parallax", "swap-baseline"] {
        let out = dir.path().join(format!("{strategy}.json"));
        let o = nacc(&["compile", "--input", bench("qft_6").to_str().unwrap(), "--strategy", strategy, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        paths.push(out.to_str().unwrap().to_string());
    }
    let mut args = vec!["summarize"];
    args.extend(paths.iter().map(String::as_str));
    let o = nacc(&args);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("qft_6 ")).count(), 3);
    assert!(table.contains("cz_reduction"));
    let bad = dir.path().join("x.json");
    std::fs::write(&bad, "{}").unwrap();
    assert_eq!(code(&nacc(&["summarize", bad.to_str().unwrap()])), 5);
    assert_eq!(code(&nacc(&["summarize", dir.path().join("none.json").to_str().unwrap()])), 3);
}
