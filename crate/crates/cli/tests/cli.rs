use std::path::PathBuf;
use std::process::{Command, Output};

fn gabba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gabba")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn verify_exit_codes() {
    let ok = gabba(&["verify", "8"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("verified K <= 8"));

    let broken = gabba(&["verify", "8", "--inject-fault", "8,3,5"]);
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        vec!["simulate", "--K", "6", "--trials", "10"],
        vec!["simulate", "--mod", "qam8", "--trials", "10"],
        vec!["analyze", "--mod", "psk4", "--channel", "nakagami:m=0.1"],
        vec!["capacity", "--esno-step", "0"],
        vec!["verify", "12"],
        vec!["simulate", "--no-such-flag"],
    ] {
        assert_eq!(gabba(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_writes_csv() {
    let out = gabba(&[
        "simulate", "--K", "4", "--nr", "2", "--mod", "qpsk", "--esno-start", "-2", "--esno-stop", "4",
        "--esno-step", "3", "--trials", "512", "--seed", "7", "--points", "500",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("esno_db,ber_sim,ber_analytic,trials,bit_errors,seconds"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("-2.0,"));
}

#[test]
fn analyze_and_capacity_write_files() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let ber = dir.join("analyze.csv");
    let out = gabba(&[
        "analyze", "--nt", "4", "--nr", "2", "--mod", "qam16", "--channel", "rice:m=2", "--profile", "linear:pmax=2",
        "--esno-start", "0", "--esno-stop", "10", "--esno-step", "5", "--out", ber.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&ber).unwrap();
    assert!(text.starts_with("esno_db,ber\n"));
    assert_eq!(text.lines().count(), 4);

    let cap = dir.join("capacity.csv");
    let out = gabba(&[
        "capacity", "--nt", "4", "--nr", "4", "--esno-start", "-10", "--esno-stop", "30", "--esno-step", "10",
        "--out", cap.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&cap).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",envelope"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn malformed_fault_is_a_configuration_error() {
    assert_eq!(gabba(&["verify", "8", "--inject-fault", "8,3"]).status.code(), Some(2));
}
