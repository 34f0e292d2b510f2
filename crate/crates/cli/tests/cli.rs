use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gcm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("GCM_OUT_DIR")
        .output()
        .expect("gcm runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn calibrate_writes_grid_fit_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = gcm(
        dir.path(),
        &[
            "calibrate",
            "--oracle",
            "defaults",
            "--lg",
            "14.5:18.5:1",
            "--wfin",
            "4.1:7.1:1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path().join("nodes")).unwrap().count(), 20);
    let fit = read(dir.path(), "gcm_fit.csv");
    assert_eq!(fit.lines().count(), 21);
    let manifest = read(dir.path(), "run_manifest.txt");
    assert!(manifest.contains("subcommand = calibrate"));
    assert!(manifest.contains("config_digest = "));

    let o = gcm(
        dir.path(),
        &[
            "seam-check",
            "--grid",
            dir.path().join("gcm").to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read(dir.path(), "seam.csv").starts_with("axis,line,segment,position_nm,max_gap\n"));
}

#[test]
fn clamp_all_metrics_at_a_point() {
    let dir = TempDir::new().unwrap();
    let o = gcm(
        dir.path(),
        &["clamp", "--point", "17.8,6.3", "--metric", "all"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "clamp_metrics.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["17.8", "6.3"]);
    for v in &row[2..6] {
        assert!(v.parse::<f64>().unwrap() > 0.0, "{csv}");
    }
    assert_eq!(row[6], "true");
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["mc", "--n", "6", "--seed", "11"];
    for d in [&a, &b] {
        let o = gcm(d.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["mc.csv", "run_manifest.txt"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert!(read(a.path(), "run_manifest.txt").contains("seed = 11"));
}

#[test]
fn zero_samples_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = gcm(dir.path(), &["mc", "--n", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("--n must be at least 1"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_flag_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = gcm(dir.path(), &["sweep", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn out_of_hull_point_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = gcm(dir.path(), &["clamp", "--point", "40,6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("outside the model grid"));
}

#[test]
fn simulate_rc_and_solver_failure() {
    let dir = TempDir::new().unwrap();
    let rc = dir.path().join("rc.cir");
    fs::write(
        &rc,
        "* rc\nV1 in 0 pwl (0 0) (1n 0.75)\nR1 in out 1k\nC1 out 0 1n\n.tran 10u\n.end\n",
    )
    .unwrap();
    let o = gcm(dir.path(), &["simulate", rc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tran = read(dir.path(), "tran.csv");
    assert!(tran.starts_with("t,in,out,i(v1)\n"));
    let last: Vec<f64> = tran
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((last[0] - 10e-6).abs() < 1e-15);
    assert!((last[2] - 0.75).abs() < 1e-3);

    let lp = dir.path().join("loop.cir");
    fs::write(&lp, "V1 a 0 dc 1\nV2 a 0 dc 2\n.op\n").unwrap();
    let o = gcm(dir.path(), &["simulate", lp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver failure"));
}

#[test]
fn missing_input_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = gcm(dir.path(), &["simulate", "/nonexistent/x.cir"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not exist"));
}
