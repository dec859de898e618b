use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lifetrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifetrack"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = lifetrack(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_names_the_token() {
    let out = lifetrack(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));
}

#[test]
fn help_exits_zero() {
    let out = lifetrack(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("run"));
}

#[test]
fn test_section_in_curriculum_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "train_sections = S1, S2\ntest_section = S1\n").unwrap();
    let out = lifetrack(&["run", "--config", arg(&cfg), "--out", arg(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("S1"));
}

#[test]
fn unknown_config_key_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "epochz = 3\n").unwrap();
    let out = lifetrack(&["tracks", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tracks_writes_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let out = lifetrack(&["tracks", "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files = Vec::new();
    for e in walk(dir.path()) {
        assert!(fs::metadata(&e).unwrap().len() > 0, "{}", e.display());
        files.push(e.to_string_lossy().into_owned());
    }
    for s in ["S1", "S2", "S3"] {
        assert!(files.iter().any(|f| f.contains(s)), "no file for {s}: {files:?}");
    }
}

#[test]
fn staged_commands_reproduce_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(
        &cfg,
        "velocities = 6, 12\ntrain.epochs = 2\nmethods = ll_me\ntest_velocity = 8\n",
    )
    .unwrap();
    let staged = dir.path().join("staged");
    for cmd in ["collect", "train", "eval", "plot"] {
        let out = lifetrack(&[cmd, "--config", arg(&cfg), "--seed", "3", "--out", arg(&staged)]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let full = dir.path().join("full");
    let out = lifetrack(&["run", "--config", arg(&cfg), "--seed", "3", "--out", arg(&full)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for rel in ["metrics/eval_matrix_ll_me.csv", "models/ll_me.txt", "datasets/index.csv"] {
        assert_eq!(fs::read(staged.join(rel)).unwrap(), fs::read(full.join(rel)).unwrap(), "{rel}");
    }
    assert!(staged.join("plots/b_k.svg").exists());
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
