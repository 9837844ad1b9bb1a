//! The `lpofdm` binary: subcommands, exit codes and reproducible output.

use std::path::Path;
use std::process::{Command, Output};

fn lpofdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpofdm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn bitrate_table_on_stdout() {
    let out = lpofdm(&["bitrate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_rows(&text);
    assert!(rows[0].starts_with("L,mod,rate_bps"));
    assert_eq!(rows.len(), 7);
    assert!(text.contains("# config_digest = "));
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        vec!["mse", "--set", "no_such_key=1"],
        vec!["mse", "--L", "24"],
        vec!["mse", "--set", "guard=8"],
        vec!["ber", "--ebno", "10:0:1"],
        vec!["mse", "--set", "subsets"],
    ] {
        let out = lpofdm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn io_errors_exit_with_three() {
    let out = lpofdm(&["bitrate", "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.csv"));

    let out = lpofdm(&["mse", "--config", "/nonexistent-dir/run.cfg"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_reruns_as_its_own_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let out = lpofdm(&[
        "mse",
        "--subsets",
        "3000",
        "--ebno",
        "-5,10",
        "--L",
        "64",
        "--speed",
        "20",
        "--seed",
        "9",
        "--out",
        &path(&first),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = lpofdm(&["mse", "--config", &path(&first), "--out", &path(&second)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = std::fs::read_to_string(&first).unwrap();
    assert_eq!(a, std::fs::read_to_string(&second).unwrap());
    let rows = data_rows(&a);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("estimated,-5.000000e0,"));
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let out = lpofdm(&[
            "mse",
            "--subsets",
            "5000",
            "--ebno",
            "0,20",
            "--threads",
            threads,
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn plotdata_has_one_block_per_series() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("ber.dat");
    let out = lpofdm(&[
        "ber",
        "--ebno",
        "6",
        "--baseline",
        "perfect-csi",
        "--set",
        "max_bits=50000",
        "--set",
        "min_blocks=1",
        "--plotdata",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(text.matches("\n\n\n").count(), 1);
    assert!(text.contains("estimated") && text.contains("perfect-csi"));
}
