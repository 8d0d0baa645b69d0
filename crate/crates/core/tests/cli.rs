//! End-to-end runs of the `ifs-scatter` binary.

use std::path::Path;
use std::process::{Command, Output};

use ifs_scatter::io::read_complex_vector_bin;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ifs-scatter"));
    c.env_remove("IFS_SCATTER_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--output-dir").arg(out).output().expect("binary runs")
}

fn sidecar(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(format!("{}.json", path.display())).expect("sidecar exists");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn mesh_and_solve_write_files_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mesh", "--preset", "quick", "--geometry", "koch"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = dir.path().join("mesh.csv");
    assert_eq!(std::fs::read_to_string(&mesh).unwrap().lines().count(), 1 + 55);
    assert_eq!(sidecar(&mesh)["summary"]["n"], 55);
    assert_eq!(sidecar(&mesh)["command"], "mesh");

    let o = run(&["solve", "--preset", "quick", "--geometry", "fudgeflake", "--level", "4"], dir.path());
    assert!(o.status.success());
    let bin = dir.path().join("coefficients.bin");
    assert_eq!(read_complex_vector_bin(&bin).unwrap().len(), 81);
    assert_eq!(sidecar(&bin)["config"]["level"], 4);
    assert!(sidecar(&dir.path().join("coefficients.csv"))["summary"].is_object());
}

#[test]
fn config_file_and_overrides_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"geometry": {"name": "koch"}, "k": 7.5, "farfield_angles": 8}"#).unwrap();
    let o = bin()
        .args(["farfield", "--preset", "quick", "--config"])
        .arg(&cfg)
        .args(["--set", "farfield_angles=12", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ff = dir.path().join("farfield.csv");
    assert_eq!(std::fs::read_to_string(&ff).unwrap().lines().count(), 13);
    let sc = sidecar(&ff);
    assert_eq!(sc["config"]["k"], 7.5);
    assert_eq!(sc["config"]["preset"], "quick");
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--preset", "quick", "--level", "5"],
        vec!["solve", "--m", "1,-0.5"],
        vec!["solve", "--set", "no_such_key=1"],
        vec!["solve", "--geometry", "mandelbrot"],
        vec!["solve", "--preset", "huge"],
        vec!["converge", "--geometry", "unit-square", "--h", "0.5"],
        vec!["frobnicate"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin().env("IFS_SCATTER_THREADS", "zero").args(["mesh", "--output-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["solve", "--preset", "quick", "--set", "solver.kind=gmres-dense", "--set", "solver.gmres.max_iter=1", "--set", "solver.gmres.restart=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["converge", "--preset", "quick", "--geometry", "koch", "--alpha", "2"];
    let oa = bin().env("IFS_SCATTER_THREADS", "1").args(args).arg("--output-dir").arg(a.path()).output().unwrap();
    let ob = bin().args(args).args(["--threads", "2", "--output-dir"]).arg(b.path()).output().unwrap();
    assert!(oa.status.success() && ob.status.success());
    let read = |d: &Path| std::fs::read(d.join("converge.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn canonical_dump_lists_classes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["canonical-dump", "--geometry", "gosper"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("canonical.json")).unwrap()).unwrap();
    assert_eq!(v["n_s"], 2);
    assert_eq!(v["solved"].as_array().unwrap().len(), 3);
}
