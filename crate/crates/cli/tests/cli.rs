//! End-to-end runs of the `qreset` binary and the library driver.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qreset_cli::config::parse_config;
use qreset_cli::experiment::{run_experiment, Recipe};
use qreset_cli::sweep::{sweep, Axis};
use qreset_cli::ERROR_LOG;
use tempfile::TempDir;

const SMALL: &str = "L = 20\ndetector_index = 13\ninitial_index = 10\n";

fn qreset(dir: &Path, recipe: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{recipe}.conf"));
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_qreset"))
        .arg(recipe)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn shipped_configs_parse() {
    for recipe in Recipe::ALL {
        let path = configs_dir().join(format!("{recipe}.conf"));
        let text = std::fs::read_to_string(&path).unwrap();
        let config = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(config.spec.length(), 500);
    }
}

#[test]
fn pdet_smoke_on_short_chain() {
    let dir = TempDir::new().unwrap();
    let out = qreset(dir.path(), "pdet", &format!("{SMALL}tau = 0.25\nhorizon = 2\n"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("out/pdet_all.csv"));
    assert_eq!(header, ["T", "Pdet_exact", "Pdet_model1", "Pdet_model2"]);
    assert_eq!(rows.len(), 8);
    for pair in rows.windows(2) {
        assert!(pair[1][1] >= pair[0][1]);
    }
    assert!(rows.iter().all(|r| r[1] <= 1.0));
}

#[test]
fn csv_layout() {
    let dir = TempDir::new().unwrap();
    let out = qreset(dir.path(), "pdet", &format!("{SMALL}tau = 0.5\nn_max = 3\nmodel = exact\n"), &[]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("out/pdet_exact.csv")).unwrap();
    assert!(text.starts_with("T,Pdet_exact\n0.5,"));
    assert!(text.ends_with('\n') && !text.contains(",\n") && !text.contains('\r'));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn optimal_tr_at_operating_point() {
    // a 13-point window of the default grid around the expected minimum
    let config = parse_config("tau = 0.25\ntr_sweep = 5, 5.25, 5.5, 5.75, 6, 6.25, 6.5, 6.75, 7, 7.25, 7.5, 7.75, 8").unwrap();
    let out = run_experiment(&config, Recipe::OptimalTr).unwrap();
    let stars: Vec<f64> = out
        .summary
        .iter()
        .filter_map(|s| s.strip_prefix("t_star_"))
        .map(|s| s.split(" = ").nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(stars.len(), 3);
    for t in stars {
        assert!((6.0..=7.0).contains(&t), "{:?}", out.summary);
    }
}

#[test]
fn delta_pr_model2_below_model1_at_operating_point() {
    let config = parse_config("tau = 0.25\nt_r = 6.0\nmodel = all").unwrap();
    let out = run_experiment(&config, Recipe::DeltaPr).unwrap();
    let a = &out.artifacts[0];
    assert_eq!(a.header(), ["R", "dP_R_model1", "dP_R_model2"]);
    for row in a.rows() {
        assert!(row[2] <= row[1], "R = {}: model1 {:e}, model2 {:e}", row[0], row[1], row[2]);
    }
}

#[test]
fn tau_sweep_matches_sequential_runs() {
    let dir = TempDir::new().unwrap();
    let base = format!("{SMALL}tau = 0.25\nhorizon = 2\nmodel = all\n");
    let out = qreset(dir.path(), "pdet", &base, &["--sweep-tau", "0.25,0.5,1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for tau in ["0.25", "0.5", "1"] {
        let single = TempDir::new().unwrap();
        let out = qreset(single.path(), "pdet", &format!("{SMALL}tau = {tau}\nhorizon = 2\n"), &[]);
        assert!(out.status.success());
        let swept = std::fs::read(dir.path().join(format!("out/pdet_all_tau{tau}.csv"))).unwrap();
        let alone = std::fs::read(single.path().join("out/pdet_all.csv")).unwrap();
        assert_eq!(swept, alone, "tau = {tau}");
    }
}

#[test]
fn singleton_sweep_equals_single_run() {
    let config = parse_config(&format!("{SMALL}tau = 0.25\nt_r = 1.0\nhorizon = 2\n")).unwrap();
    let single = run_experiment(&config, Recipe::DeltaPr).unwrap();
    let points = sweep(&config, Recipe::DeltaPr, Axis::TR, &[1.0]).unwrap();
    let swept = points[0].outcome.as_ref().unwrap();
    assert_eq!(swept.artifacts[0].render(), single.artifacts[0].render());
    assert_eq!(swept.artifacts[0].name, "delta-pr_all_tr1.csv");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = format!("{SMALL}tau = 0.25\ntr_sweep = 0.5, 1.0, 1.5, 2.0\n");
    let render = || {
        let dir = TempDir::new().unwrap();
        let out = qreset(dir.path(), "optimal-tr", &config, &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("out/optimal-tr_all.csv")).unwrap()
    };
    assert_eq!(render(), render());
}

#[test]
fn validation_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(qreset(dir.path(), "pdet", "tau = 0.25\nwidth = 3\n", &[]).status.code(), Some(1));
    assert_eq!(qreset(dir.path(), "pdet", "L = 500\n", &[]).status.code(), Some(1));
    assert_eq!(qreset(dir.path(), "fig9", "tau = 0.25\n", &[]).status.code(), Some(1));
    assert_eq!(
        qreset(dir.path(), "pdet", "tau = 0.3\nt_r = 1.0\nmodel = exact\n", &[]).status.code(),
        Some(1)
    );
    assert_eq!(qreset(dir.path(), "pdet", "tau = 0.25\n", &["--sweep-tau", ""]).status.code(), Some(1));
    assert_eq!(qreset(dir.path(), "reset-survival", "tau = 0.25\n", &[]).status.code(), Some(1));
}

#[test]
fn partial_sweep_exits_2_and_keeps_completed_points() {
    let dir = TempDir::new().unwrap();
    // eight steps of τ = 2 carry the front into the chain edges
    let out = qreset(dir.path(), "pdet", &format!("{SMALL}tau = 0.25\nn_max = 8\n"), &["--sweep-tau", "0.25,2.0"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/pdet_all_tau0.25.csv").exists());
    assert!(!dir.path().join("out/pdet_all_tau2.csv").exists());
    let log = std::fs::read_to_string(dir.path().join("out").join(ERROR_LOG)).unwrap();
    assert!(log.contains("tau=2"), "{log}");

    let again = qreset(dir.path(), "pdet", &format!("{SMALL}tau = 0.25\nhorizon = 2\n"), &[]);
    assert!(again.status.success());
    assert!(!dir.path().join("out").join(ERROR_LOG).exists());
}
