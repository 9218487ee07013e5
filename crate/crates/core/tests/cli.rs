use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
n = 16

[config_space]
n_radial = 16
n_angular = 16
n_basis = 8

[time]
dt = 1e-3
horizon_t = 0.01

[run]
snapshot_every = 5
"#;

fn fene(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fene")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bad_extensibility_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[model]\nb = 1.5\n"));
    let out = fene(&["run", &cfg, "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("b > 2"), "stderr: {err}");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[model]\nviscosity = 1.0\n"));
    let out = fene(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_or_config_error() {
    let out = fene(&["run", "/nonexistent/run.toml"]);
    assert!(matches!(out.status.code(), Some(2) | Some(3)));
}

#[test]
fn run_report_and_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");

    let out = fene(&["run", &cfg, "--output", full.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["series.csv", "manifest.json", "snapshots/step_00000010.fkp"] {
        assert!(full.join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(full.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["seed"], 7);

    let out = fene(&["report", full.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("mass drift") && text.contains("completed"), "{text}");

    let p = part.to_str().unwrap();
    let out = fene(&["run", &cfg, "--output", p, "--seed", "7", "--max-steps", "5"]);
    assert!(out.status.success());
    let snap = part.join("snapshots/step_00000005.fkp");
    let out = fene(&["resume", snap.to_str().unwrap(), &cfg, "--output", p, "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(full.join("series.csv")).unwrap(),
        std::fs::read(part.join("series.csv")).unwrap()
    );
}

#[test]
fn low_ceiling_reports_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = tmp.path().join("o");
    let out = fene(&["run", &cfg, "--output", o.to_str().unwrap(), "--ceiling", "1e-6"]);
    assert_eq!(out.status.code(), Some(12));
    let manifest = std::fs::read_to_string(o.join("manifest.json")).unwrap();
    assert!(manifest.contains("blow"), "{manifest}");
}

#[test]
fn resume_rejects_corrupt_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let bad = tmp.path().join("bad.fkp");
    std::fs::write(&bad, b"NOPE\x01\x00\x00\x00").unwrap();
    let out = fene(&["resume", bad.to_str().unwrap(), &cfg, "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
