use std::fs;
use std::path::Path;
use std::process::Command;

use sdg::io::read_matrix;

fn sdg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sdg")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    let mut all = vec!["--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    sdg(&all)
}

#[test]
fn dof_table_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--experiment", "dof", "--N", "16,64"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("dof.csv")).unwrap();
    assert!(csv.contains("\n16,3136,1825,"));
    assert!(csv.contains("\n64,49408,28801,"));
    assert!(fs::read_to_string(dir.path().join("dof.md")).unwrap().contains("0.5829"));
}

#[test]
fn config_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--N", "4,2"],
        vec!["--experiment", "7"],
        vec!["--quad-degree", "1"],
        vec!["--config", "/nonexistent/run.cfg"],
        vec!["--method", "cg"],
    ] {
        let out = run_in(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--experiment", "2", "--mu", "1e-2", "--N", "2,4,8", "--deterministic"];
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &args).status.code(), Some(0));
    }
    for name in ["exp2_sdg_mu1e-2.csv", "exp2_esdg_mu1e-2.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap());
        assert!(String::from_utf8(x).unwrap().starts_with("N,error_u,order_u,error_z,order_z\n2,"));
    }
}

#[test]
fn grid_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "experiment = 1\nmethod = ESDG\nN = 2, 4\ngrid = 11\ndump = true\n").unwrap();
    let out = run_in(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let grid = fs::read_to_string(dir.path().join("exp1_esdg_mu1e0_N4_grid.txt")).unwrap();
    assert_eq!(grid.lines().count(), 121);
    assert!(grid.lines().all(|l| l.split_whitespace().count() == 5));
    let a =
        read_matrix(fs::File::open(dir.path().join("exp1_esdg_mu1e0_N4_A.txt")).map(std::io::BufReader::new).unwrap())
            .unwrap();
    assert_eq!(a.shape(), (121, 121));
    let mesh = fs::read_to_string(dir.path().join("exp1_esdg_mu1e0_N4_mesh.txt")).unwrap();
    assert!(mesh.starts_with("VERTICES 57\n"));
    assert_eq!(fs::read_to_string(dir.path().join("exp1_esdg_mu1e0_N4_u.txt")).unwrap().lines().count(), 121);
}

#[test]
fn stability_table_lists_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--experiment", "3", "--N", "4", "--mu", "1,1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("exp3_esdg_N4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.starts_with("mu,theta,z_norm,condition\n1.0,0.0,"));
}

#[test]
fn theta_outside_experiment_3_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--experiment", "1", "--N", "2", "--theta", "0", "--method", "sdg"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
