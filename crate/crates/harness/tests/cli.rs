use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qrn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrn")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_default_point_prints_csv() {
    let out = qrn(&["evaluate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("evaluate,0,0.99,100000.0,0.542,"));
    assert!(lines[1].contains(",true,feasible,"));
}

#[test]
fn parameter_overrides_reach_the_record() {
    let out = qrn(&[
        "evaluate",
        "--f0",
        "0.95",
        "--n-links",
        "3",
        "--d",
        "1.5",
        "--n-e2e-distill",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[2], "0.95");
    assert_eq!(&fields[15..19], ["3", "1.5", "0", "1"]);
}

#[test]
fn json_output_is_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("opt.json");
    let out = qrn(&["optimize", "--out", path_str(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["spec_echo"]["scenario"], "optimize");
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["summary"]["best"]["n_links"], 22);
}

#[test]
fn exit_codes() {
    // Invalid spec: a parameter outside its domain.
    assert_eq!(qrn(&["optimize", "--f0", "1.5"]).status.code(), Some(1));
    // No feasible solution.
    assert_eq!(qrn(&["optimize", "--f-min", "0.999"]).status.code(), Some(2));
    // Missing config file.
    assert_eq!(
        qrn(&["sweep", "--config", "/nonexistent/spec.toml"]).status.code(),
        Some(3)
    );
    // Sweep without a config.
    assert_eq!(qrn(&["sweep"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "scenario = \"sweep_qos\"\n[grid]\nf_min = [0.5]\n").unwrap();
    assert_eq!(qrn(&["sweep", "--config", path_str(&bad)]).status.code(), Some(1));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out.csv");
    assert_eq!(qrn(&["evaluate", "--out", path_str(&target)]).status.code(), Some(3));
}

#[test]
fn sweep_writes_to_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fig4.csv");
    let out = qrn(&[
        "sweep",
        "--config",
        &config("fig4_d_vs_rmin_r0.toml"),
        "--out",
        path_str(&out_path),
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn oracle_check_passes_on_default_setup() {
    let out = qrn(&["oracle-check"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}
