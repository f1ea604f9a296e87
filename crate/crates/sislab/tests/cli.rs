use std::path::Path;
use std::process::{Command, Output};

use sislab::csv::{CONVERGENCE_HEADER, CURVES_HEADER, PHASE_HEADER, SSA_HEADER};

fn sislab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sislab"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn usage_errors_exit_one_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = sislab(dir.path(), &["master", "--n", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n"));

    let out = sislab(dir.path(), &["ssa", "--n", "10", "--u", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--u"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sislab(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(sislab(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn master_writes_curves_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = sislab(
        dir.path(),
        &["master", "--n", "20", "--num-points", "11", "--retain-distributions"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("master.csv");
    assert_eq!(header(&path), CURVES_HEADER);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 12);
    let dist = std::fs::read_to_string(dir.path().join("master.dist.csv")).unwrap();
    assert!(dist.starts_with("t,x0,x1,"));
    assert!(dist.lines().next().unwrap().ends_with(",x20"));
}

#[test]
fn sandwich_with_defaults_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = sislab(dir.path(), &["sandwich", "--n", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("violations: 0"));
    assert_eq!(header(&dir.path().join("sandwich.csv")), CURVES_HEADER);
}

#[test]
fn converge_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out| {
        [
            "converge",
            "--n-list",
            "10,20",
            "--num-points",
            "21",
            "--sampled",
            "--reps",
            "500",
            "--out",
            out,
        ]
    };
    assert_eq!(sislab(dir.path(), &args("a.csv")).status.code(), Some(0));
    assert_eq!(sislab(dir.path(), &args("b.csv")).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), CONVERGENCE_HEADER);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn remaining_subcommands_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file, head) in [
        (&["meanfield"][..], "meanfield.csv", CURVES_HEADER),
        (&["bounds", "--n", "30"][..], "bounds.csv", CURVES_HEADER),
        (&["phase", "--n", "30"][..], "phase.csv", PHASE_HEADER),
        (&["ssa", "--n", "30", "--reps", "200"][..], "ssa.csv", SSA_HEADER),
    ] {
        let out = sislab(dir.path(), &[args, &["--num-points", "11"]].concat());
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(header(&dir.path().join(file)), head);
    }
}

#[test]
fn infeasible_size_is_a_compute_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sislab(dir.path(), &["converge", "--n-list", "20,5000000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5000000"));
}
