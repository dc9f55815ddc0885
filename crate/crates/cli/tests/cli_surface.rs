//! CLI surface checks beyond the acceptance determinism criterion:
//! traces, flag overrides, and error exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn obsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_obsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("obsim-cli-surface").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn trace_flag_writes_per_drop_traces() {
    let out = tmp("trace");
    let cfg = config("toy_oracle.cfg");
    let res = obsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--drops",
        "2",
        "--trace",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let traces: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("trace_drop_"))
        .collect();
    assert_eq!(traces.len(), 2);
    let text = std::fs::read_to_string(traces[0].path()).unwrap();
    assert!(text.starts_with("iter,net_utility,dual_bound,max_violation,step\n"));
    assert!(text.lines().count() > 2);
}

#[test]
fn seed_override_changes_outputs() {
    let out_a = tmp("seed-a");
    let out_b = tmp("seed-b");
    let cfg = config("toy_oracle.cfg");
    for (out, seed) in [(&out_a, "1"), (&out_b, "2")] {
        let res = obsim(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--drops",
            "2",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    let a = std::fs::read(out_a.join("cdf.csv")).unwrap();
    let b = std::fs::read(out_b.join("cdf.csv")).unwrap();
    assert_ne!(a, b, "different seeds must change the sample");
}

#[test]
fn config_errors_exit_one() {
    let dir = tmp("bad");
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "[scenario]\nadoption_rate = 2.0\n").unwrap();
    let res = obsim(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("adoption_rate"), "{msg}");

    let res = obsim(&["run", "--config", "/nonexistent.cfg"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn meta_contains_config_echo_and_seed() {
    let out = tmp("meta");
    let cfg = config("toy_oracle.cfg");
    let res = obsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--drops",
        "1",
        "--seed",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let meta = std::fs::read_to_string(out.join("meta.txt")).unwrap();
    assert!(meta.contains("base_seed = 99"));
    assert!(meta.contains("[scenario]"));
    assert!(meta.contains("version = "));
    assert!(meta.contains("wall_time_s = "));
}
