use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use hadamard_ep::cli::{run, CliError, Command, Outcome, RunArgs};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn args(config: PathBuf, out: &Path, seed: Option<u64>) -> RunArgs {
    RunArgs { config, seed, out: Some(out.to_path_buf()) }
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

#[test]
fn solve_outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let (outcome, _) = run(&Command::Solve(args(configs().join("example41-solve.json"), dir, None))).unwrap();
        assert_eq!(outcome, Outcome::Ok);
    }
    for name in ["trace.jsonl", "trace.csv", "report.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
    let report: serde_json::Value = serde_json::from_slice(&read(&a, "report.json")).unwrap();
    assert_eq!(report["status"], serde_json::json!({ "FiniteTermination": 5 }));
    assert_eq!(report["final_point"], serde_json::json!([1.0]));
}

#[test]
fn sampled_reports_depend_only_on_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example41-properties.json");
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    run(&Command::Properties(args(cfg.clone(), &dirs[0], Some(9)))).unwrap();
    run(&Command::Properties(args(cfg.clone(), &dirs[1], Some(9)))).unwrap();
    run(&Command::Properties(args(cfg, &dirs[2], Some(10)))).unwrap();
    assert_eq!(read(&dirs[0], "report.json"), read(&dirs[1], "report.json"));
    assert_ne!(read(&dirs[0], "report.json"), read(&dirs[2], "report.json"));
}

#[test]
fn example41_properties_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (outcome, lines) =
        run(&Command::Properties(args(configs().join("example41-properties.json"), tmp.path(), None))).unwrap();
    assert_eq!(outcome, Outcome::Counterexample);
    assert!(lines.iter().any(|l| l == "Monotone: CounterexampleFound"));
    assert!(lines.iter().any(|l| l == "Pseudomonotone: PassedOnSamples"));
    let report: serde_json::Value = serde_json::from_slice(&read(tmp.path(), "report.json")).unwrap();
    let theta = report["reports"].as_array().unwrap().iter().find(|r| r["property"] == "ThetaUndermonotone").unwrap()
        ["theta_estimate"]
        .as_f64()
        .unwrap();
    assert!((theta - 1.0).abs() < 1e-6);
}

#[test]
fn trap_certifies_a_solve_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let solve_out = tmp.path().join("solve");
    run(&Command::Solve(args(configs().join("example41-solve.json"), &solve_out, None))).unwrap();
    let cfg = tmp.path().join("trap.json");
    fs::write(
        &cfg,
        r#"{"task":"trap","problem":{"name":"example41"},"samples":500,
            "trap":{"trace":"solve/trace.jsonl","lambda":7.0}}"#,
    )
    .unwrap();
    let (outcome, lines) = run(&Command::Trap(args(cfg, &tmp.path().join("trap"), None))).unwrap();
    assert_eq!(outcome, Outcome::Ok);
    assert_eq!(lines[0], "verdict: VariationalTrap");
}

#[test]
fn config_errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\n  \"task\": \"solve\",\n  \"problem\": {\"name\": \"example41\"},\n  \"x0\": [0.5],\n  \"proximal\": {\"lambda\": 7, \"inner\": {\"kind\": \"newton\"}}\n}").unwrap();
    match run(&Command::Solve(args(cfg.clone(), tmp.path(), None))) {
        Err(CliError::Config { field, message, .. }) => {
            assert_eq!(field, "proximal.inner.kind");
            assert!(message.contains("line 5"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    let err = run(&Command::Properties(args(configs().join("example41-solve.json"), tmp.path(), None))).unwrap_err();
    assert!(matches!(err, CliError::Invalid(_)));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hadamard-ep");
    let tmp = tempfile::tempdir().unwrap();
    let status = |sub: &str, cfg: &str| {
        Process::new(bin)
            .args([sub, "--config"])
            .arg(configs().join(cfg))
            .arg("--out")
            .arg(tmp.path().join(sub))
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status("geometry-test", "h2-geometry.json"), Some(0));
    assert_eq!(status("properties", "example41-properties.json"), Some(2));
    assert_eq!(status("solve", "missing.json"), Some(1));
}
