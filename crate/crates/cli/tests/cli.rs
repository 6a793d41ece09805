use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GILBERT: &str = r#"
[model]
name = "gilbert"
marks = { kind = "point-mass", value = 0.5 }
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn rcmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcmlab"))
        .args(args)
        .env_remove("RCMLAB_SEED")
        .output()
        .expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rcmlab(&args)
}

fn column(csv: &str, quantity: &str, col: usize) -> String {
    csv.lines()
        .find(|l| l.starts_with(&format!("{quantity},")))
        .unwrap_or_else(|| panic!("no {quantity} row in\n{csv}"))
        .split(',')
        .nth(col)
        .unwrap()
        .to_string()
}

#[test]
fn zero_intensity_simulation_has_no_points() {
    let dir = TempDir::new().unwrap();
    let body = format!("kind = \"simulate\"\nt = 0.0\nreps = 4\n{GILBERT}\n[window]\nside = 10.0\nboundary = \"torus\"\n");
    let cfg = write_config(dir.path(), "empty.toml", &body);
    let out = run(&cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert!(csv.starts_with("quantity,t,t0,value,stderr,n,censored,config_hash,seed\n"));
    assert_eq!(column(&csv, "points", 3), "0");
    assert_eq!(column(&csv, "edges", 3), "0");
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let body = format!("kind = \"explore\"\nt = 0.8\nreps = 300\nseed = 9\n{GILBERT}");
    let cfg = write_config(dir.path(), "explore.toml", &body);
    let read = |sub: &str, extra: &[&str]| {
        let out_dir = dir.path().join(sub);
        let out = run(&cfg, &out_dir, extra);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_dir.join("explore.json")).unwrap()
    };
    let a = read("a", &["--format", "json", "--workers", "2"]);
    let b = read("b", &["--format", "json", "--workers", "2"]);
    let c = read("c", &["--format", "json", "--workers", "1"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = read("d", &["--format", "json", "--seed", "10"]);
    assert_ne!(a, d);
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let body = format!("kind = \"explore\"\nt = 0.5\nreps = 10\n{GILBERT}");
    let cfg = write_config(dir.path(), "seeded.toml", &body);
    let seed_of = |envseed: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcmlab"));
        cmd.args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        cmd.env_remove("RCMLAB_SEED");
        if let Some(e) = envseed {
            cmd.env("RCMLAB_SEED", e);
        }
        assert!(cmd.output().unwrap().status.success());
        column(&fs::read_to_string(dir.path().join("seeded.csv")).unwrap(), "theta", 8)
    };
    assert_eq!(seed_of(None, None), "0");
    assert_eq!(seed_of(Some("77"), None), "77");
    assert_eq!(seed_of(Some("77"), Some("5")), "5");
}

#[test]
fn two_block_kernel_is_reducible() {
    let dir = TempDir::new().unwrap();
    let body = r#"
kind = "irreducibility"
cells = 16

[model]
name = "two-block"
radius = 1.0
split = 0.5
within = 0.9
marks = { kind = "uniform", lo = 0.0, hi = 1.0 }
"#;
    let cfg = write_config(dir.path(), "blocks.toml", body);
    let out = run(&cfg, dir.path(), &["--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("blocks.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["verdict"], "reducible");
    assert_eq!(doc["report"]["blocks"].as_array().unwrap().len(), 2);
}

#[test]
fn validate_names_violations() {
    let dir = TempDir::new().unwrap();
    let small = format!("kind = \"simulate\"\nt = 1.0\n{GILBERT}\n[window]\nside = 1.5\nboundary = \"torus\"\n");
    let out = rcmlab(&["validate", "--config", write_config(dir.path(), "small.toml", &small).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("torus side 1.5"));

    let negative = format!("kind = \"explore\"\nt = -0.5\n{GILBERT}");
    let out = rcmlab(&["validate", "--config", write_config(dir.path(), "neg.toml", &negative).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("intensity: -0.5"));

    let fine = format!("kind = \"explore\"\nt = 0.5\n{GILBERT}");
    let out = rcmlab(&["validate", "--config", write_config(dir.path(), "fine.toml", &fine).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn config_errors_exit_one_and_runtime_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let broken = write_config(dir.path(), "broken.toml", "kind = \"simulate\"\n[model\n");
    assert_eq!(run(&broken, dir.path(), &[]).status.code(), Some(1));

    // passes validation, then exceeds the point cap at run time
    let body = format!(
        "kind = \"uniqueness-probe\"\nt = 0.5\nt0 = 0.5\nsides = [100.0]\nreps = 2\ncaps = {{ max_expected_points = 50.0 }}\n{GILBERT}"
    );
    let cfg = write_config(dir.path(), "caps.toml", &body);
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("caps.csv").exists());
}

#[test]
fn echoed_config_revalidates() {
    let dir = TempDir::new().unwrap();
    let body = format!("kind = \"sweep\"\nt_grid = [0.3, 0.6]\nreps = 50\n{GILBERT}");
    let cfg = write_config(dir.path(), "sweep.toml", &body);
    assert!(run(&cfg, dir.path(), &["--format", "json"]).status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    let echoed = write_config(dir.path(), "echo.json", &doc["config"].to_string());
    let out = rcmlab(&["validate", "--config", echoed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rerun = dir.path().join("rerun");
    assert!(run(&echoed, &rerun, &["--format", "json"]).status.success());
    let redo: serde_json::Value = serde_json::from_str(&fs::read_to_string(rerun.join("echo.json")).unwrap()).unwrap();
    assert_eq!(redo["config_hash"], doc["config_hash"]);
    assert_eq!(redo["records"], doc["records"]);
}

#[test]
fn consistency_suite_passes() {
    let dir = TempDir::new().unwrap();
    let body = format!("kind = \"consistency-suite\"\nt = 0.5\nreps = 400\n{GILBERT}");
    let cfg = write_config(dir.path(), "suite.toml", &body);
    let out = run(&cfg, dir.path(), &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("suite.json")).unwrap()).unwrap();
    let checks = doc["report"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 6);
    assert!(checks.iter().all(|c| c["pass"] == true), "{checks:?}");
}
