use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use erglab::report::strip_timings;

const SMALL: &str = r#"
alphas = [0.5]
seed = 3
sample_count = 20000

[system]
id = "tent"

[observable]
id = "coord"

[ladder]
min = 1
max = 20

[cover]
n = { min = 4, max = 12 }

[lemma]
n = 6
pairs = 300

[flow]
roof = { kind = "cosine", a = 0.3 }
t_ladder = [8.0, 12.5]
samples = 100
"#;

fn erglab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erglab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ERGLAB_OUT")
        .output()
        .unwrap()
}

fn setup(text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, text).unwrap();
    (dir, cfg)
}

#[test]
fn report_happy_path_writes_json() {
    let (dir, cfg) = setup(SMALL);
    let out = erglab(&["report", "--config", cfg.to_str().unwrap(), "--seed", "42", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(dir.path().join("o/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["config"]["seed"], 42);
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict"));
}

#[test]
fn every_subcommand_runs() {
    let (dir, cfg) = setup(SMALL);
    for sub in ["simulate", "ldp-fit", "dimension", "cover", "verify", "report"] {
        let out = erglab(&[sub, "--config", cfg.to_str().unwrap(), "--out", sub], dir.path());
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(sub).join("report.json")).unwrap()).unwrap();
        assert_eq!(v["command"], sub);
    }
}

#[test]
fn csv_format_writes_documented_headers() {
    let (dir, cfg) = setup(SMALL);
    let out = erglab(&["cover", "--config", cfg.to_str().unwrap(), "--format", "csv", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let ladder = std::fs::read_to_string(dir.path().join("c/ladder_alpha_0.5.csv")).unwrap();
    assert_eq!(ladder.lines().next().unwrap(), "n,measure,std_error,samples,method");
    assert_eq!(ladder.lines().count(), 21);
    assert!(dir.path().join("c/ladder_alpha_0.25.csv").exists());
    let cover = std::fs::read_to_string(dir.path().join("c/cover_alpha_0.5.csv")).unwrap();
    let header = cover.lines().next().unwrap();
    assert!(header.starts_with("n,r_n,card,dprime="), "{header}");
    assert_eq!(header.split(',').count(), 4);
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(erglab(&["report"], dir.path()).status.code(), Some(2));
    assert_eq!(erglab(&["report", "--config", "nope.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn unknown_flag_or_subcommand_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = erglab(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let (dir, cfg) = setup(SMALL);
    let out = erglab(&["report", "--config", cfg.to_str().unwrap(), "--fast"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = erglab(&["report", "--config", cfg.to_str().unwrap(), "--threads", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_field_is_named() {
    let (dir, cfg) = setup(&SMALL.replace("sample_count = 20000", "sample_count = 5"));
    let out = erglab(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample_count"));
}

#[test]
fn runtime_failure_exits_one_and_flushes_partial_report() {
    let text = SMALL.replace("n = { min = 4, max = 12 }", "n = { min = 4, max = 12 }\ngrid_budget = 5");
    let (dir, cfg) = setup(&text);
    let out = erglab(&["report", "--config", cfg.to_str().unwrap(), "--out", "p"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cover"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p/report.json")).unwrap()).unwrap();
    assert_eq!(v["failure"]["stage"], "cover");
    assert!(v["experiments"][0]["half_fit"].is_object());
}

#[test]
fn thread_count_does_not_change_the_report() {
    let (dir, cfg) = setup(SMALL);
    let mut bodies = Vec::new();
    for t in ["1", "3"] {
        let o = format!("t{t}");
        let out = erglab(&["report", "--config", cfg.to_str().unwrap(), "--threads", t, "--out", &o], dir.path());
        assert_eq!(out.status.code(), Some(0));
        bodies.push(strip_timings(&std::fs::read_to_string(dir.path().join(o).join("report.json")).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn output_dir_from_environment() {
    let (dir, cfg) = setup(SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_erglab"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("ERGLAB_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from-env/report.json").exists());
}
