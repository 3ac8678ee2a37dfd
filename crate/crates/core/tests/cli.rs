//! End-to-end runs of the `molcap` binary.

use std::path::Path;
use std::process::{Command, Output};

use molcap::report::CsvTable;

fn molcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molcap")).args(args).output().unwrap()
}

fn table(out: &Output) -> CsvTable {
    CsvTable::read_from(out.stdout.as_slice()).unwrap()
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(molcap(&["--help"]).status.code(), Some(0));
    let v = molcap(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("molcap "));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(molcap(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(molcap(&["capacity-dmc", "--q1", "0.5"]).status.code(), Some(2));
    assert_eq!(molcap(&["capacity-dmc", "--xmax", "3"]).status.code(), Some(2));
    assert_eq!(
        molcap(&["capacity-dmc", "--q1", "0.5", "--t", "1", "--xmax", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        molcap(&["capacity-constrained", "--q1", "0.5", "--xmax", "3", "--e", "1", "--s", "1"]).status.code(),
        Some(2)
    );
    let out = molcap(&["capacity-per-time", "--l", "1e-2", "--v", "1", "--sigma2", "1", "--t", "1e-3", "--pbar", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_values_exit_one() {
    let out = molcap(&["capacity-dmc", "--q1", "1.5", "--xmax", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q1"));
}

#[test]
fn non_convergence_still_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.csv");
    let out = molcap(&[
        "--out",
        path.to_str().unwrap(),
        "capacity-dmc",
        "--q1",
        "0.6",
        "--xmax",
        "30",
        "--max-iter",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let t = CsvTable::read_path(&path).unwrap();
    assert_eq!(t.rows[0][t.column("converged").unwrap()], "false");
}

#[test]
fn capacity_row_carries_value_and_law() {
    let out = molcap(&["capacity-dmc", "--q1", "0.5", "--xmax", "1"]);
    assert!(out.status.success());
    let t = table(&out);
    assert!(t.meta[0].starts_with("molcap "));
    let value = t.real_column("value").unwrap()[0];
    assert!((value - 1.25f64.log2()).abs() < 1e-9);
    let a: Vec<f64> = t.rows[0][t.column("a").unwrap()].split(';').map(|s| s.parse().unwrap()).collect();
    assert_eq!(a.len(), 2);
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn repeated_flags_take_the_last_value() {
    let t = table(&molcap(&["capacity-dmc", "--q1", "0.1", "--xmax", "1", "--q1", "0.5"]));
    assert_eq!(t.real_column("q1").unwrap()[0], 0.5);
}

#[test]
fn isi_bounds_rows_follow_grid_and_policy_order() {
    let t = table(&molcap(&[
        "isi-bounds", "--l", "1e-2", "--v", "1", "--sigma2", "1", "--t-grid", "1e-3:1e-2:2:log", "--xmax", "2", "--policy",
        "self-optimal", "--policy", "uniform",
    ]));
    let policy = t.column("policy").unwrap();
    let names: Vec<&str> = t.rows.iter().map(|r| r[policy].as_str()).collect();
    assert_eq!(names, ["self-optimal", "uniform", "self-optimal", "uniform"]);
    let ts = t.real_column("T").unwrap();
    assert_eq!(ts[0], 1e-3);
    assert_eq!(ts[3], 1e-2);
}

#[test]
fn detector_table_lists_every_count() {
    let t = table(&molcap(&["detector-error", "--q1", "0.6", "--q2", "0.2", "--xmax", "2", "--model", "stm", "--table"]));
    assert_eq!(t.header, ["y", "x_hat", "p_y", "p_correct"]);
    assert_eq!(t.rows.len(), 5);
    let mass: f64 = t.real_column("p_y").unwrap().iter().sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn simulation_is_seeded() {
    let args = |seed: &'static str| {
        molcap(&["simulate", "--l", "1e-2", "--v", "10", "--sigma2", "1", "--t", "3e-2", "--xmax", "7", "--frames", "20000", "--seed", seed])
    };
    assert_eq!(args("5").stdout, args("5").stdout);
    assert_ne!(table(&args("5")).rows, table(&args("6")).rows);
}

#[test]
fn trace_has_one_row_per_frame() {
    let t = table(&molcap(&[
        "simulate", "--l", "1e-2", "--v", "10", "--sigma2", "1", "--t", "3e-2", "--xmax", "3", "--frames", "25", "--trace",
    ]));
    assert_eq!(t.rows.len(), 25);
    assert_eq!(t.header, ["slot", "x", "y", "x_hat"]);
}

#[test]
fn sweep_matches_individual_runs() {
    let swept = table(&molcap(&[
        "sweep", "--measure", "capacity-dmc", "--param", "q1", "--grid", "0.25:0.75:3", "--", "--xmax", "3",
    ]));
    assert_eq!(swept.header[0], "q1");
    let values = swept.real_column("value").unwrap();
    for (i, q1) in ["0.25", "0.5", "0.75"].iter().enumerate() {
        let single = table(&molcap(&["capacity-dmc", "--q1", q1, "--xmax", "3"]));
        assert_eq!(single.real_column("value").unwrap()[0], values[i]);
    }
}

#[test]
fn sweep_rejects_output_inside_forwarded_arguments() {
    let out = molcap(&["sweep", "--measure", "capacity-dmc", "--param", "q1", "--grid", "0.2:0.4:2", "--", "--xmax", "2", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new("x.csv").exists());
}

#[test]
fn worker_count_does_not_change_output() {
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_molcap"))
            .args(["t-opt", "--l", "1e-2", "--v", "1", "--sigma2", "0.5", "--pmax", "2e4", "--t-lo", "5e-5", "--t-hi", "2e-3"])
            .env("MOLCAP_WORKERS", workers)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}
