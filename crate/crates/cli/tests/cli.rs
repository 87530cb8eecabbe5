//! Drives the `discourse` binary end to end.

use std::fs;
use std::process::{Command, Output};

fn discourse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discourse")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_outputs_and_digest_replays_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let mem = dir.path().join("mem.jsonl");
    let o = discourse(&[
        "run", "--case", "4", "--seed", "3", "--steps", "6", "--snapshots", "1,3,6",
        "--out", out_s, "--memory-export", mem.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("t=")).count(), 3, "{text}");
    assert!(text.contains("cumulative reward"));
    for f in ["run_log.jsonl", "metrics.csv", "reward.csv", "probes.jsonl", "memory.jsonl"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("data").join("scenario_4").is_dir());
    assert!(mem.is_file());
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);
    assert!(metrics.starts_with("case,t,sentiment,toxicity,extremity,aqs,fallacy,evidence,n_comments"));

    let a = discourse(&["digest", out_s]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = discourse(&["digest", out.join("run_log.jsonl").to_str().unwrap()]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).lines().any(|l| l.starts_with("stream ")));

    // Same seed, same stream digest.
    let again = dir.path().join("again");
    assert!(discourse(&["run", "--case", "4", "--seed", "3", "--steps", "6", "--snapshots", "1,3,6", "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(stdout(&discourse(&["digest", again.to_str().unwrap()])), stdout(&a));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, "case_id = \"Case2\"\nhorizon = 3\nseed = 8\nsnapshots = [1, 3]\n").unwrap();
    let out = dir.path().join("o");
    let o = discourse(&["run", "--config", cfg.to_str().unwrap(), "--steps", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("2,1,"));
    assert!(!out.join("memory.jsonl").exists());
}

#[test]
fn bad_arguments_fail() {
    assert!(!discourse(&["run", "--case", "7"]).status.success());
    assert!(!discourse(&["run", "--ablation", "nonsense"]).status.success());
    assert!(!discourse(&["digest", "/nonexistent/run_log.jsonl"]).status.success());
}
