#![allow(clippy::approx_constant)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edsense::detector::{bound_report, DetectorConfig};
use edsense::fading::{FadingModel, SignalBand};
use edsense::gnormal::GNormalParams;

fn edsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edsense")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const BOUNDS: [&str; 13] = [
    "bounds", "--fading", "constant:eps=1", "--noise", "1,1.4142", "--band", "1,3", "--n", "100", "--p", "0.01",
    "--beta", "1",
];

#[test]
fn bounds_row_matches_library() {
    let out = edsense(&BOUNDS);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];

    let lambda: f64 = field("lambda").parse().unwrap();
    assert!((lambda - 100.894).abs() < 1e-3, "{lambda}");

    let cfg = DetectorConfig::new(
        100,
        0.01,
        1.0,
        GNormalParams::new(1.0, 1.4142).unwrap(),
        SignalBand::new(1.0, 3.0).unwrap(),
        FadingModel::constant(1.0).unwrap(),
    )
    .unwrap();
    let report = bound_report(&cfg).unwrap();
    assert_eq!(lambda, report.lambda);
    assert_eq!(field("k_beta").parse::<f64>().unwrap(), report.k_beta);
    assert_eq!(field("md_max").parse::<f64>().unwrap(), report.md_max.value());
    assert_eq!(field("decay_ok"), report.decay_ok.to_string());
    assert_eq!(field("warning"), "");
}

#[test]
fn missing_flag_is_a_usage_error() {
    let out = edsense(&BOUNDS[..BOUNDS.len() - 2]);
    assert_eq!(out.status.code(), Some(2));
    let out = edsense(&["bounds", "--noise", "1,2", "--band", "1,2", "--n", "10", "--p", "0.1", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn auto_beta_reports_failed_decay_condition() {
    let out = edsense(&[
        "bounds", "--fading", "rayleigh:sigma=0.1", "--noise", "1,1.4142", "--band", "0.1,0.2", "--n", "100", "--p",
        "0.01", "--auto-beta",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",false,"), "{row}");
    assert!(row.contains("decay condition fails"), "{row}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn bad_values_exit_with_code_two() {
    let mut args = BOUNDS.to_vec();
    args[2] = "gamma:k=1";
    assert_eq!(edsense(&args).status.code(), Some(2));
    let mut args = BOUNDS.to_vec();
    args[10] = "1.5";
    assert_eq!(edsense(&args).status.code(), Some(2));
}

#[test]
fn config_file_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# sweep\nn = 100\nfading = bogus\n").unwrap();
    let out = edsense(&["sweep", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3:10"));
}

fn run_fig(kind: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![kind, "--snr-db", "-4:0:2", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    edsense(&args)
}

#[test]
fn figures_write_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["fig1a", "fig1b", "fig2", "fig3", "baseline", "sweep"] {
        let out = run_fig(kind, dir.path(), &["--plot"]);
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = dir.path().join(format!("{kind}.csv"));
        assert!(fs::read_to_string(&csv).unwrap().lines().count() > 1, "{kind}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("snr_db"));
    assert!(fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn calibrated_n_lands_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fig("fig1a", dir.path(), &["--calibrate-n"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrated n = 741"));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("calibrated_n = 741"), "{manifest}");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--n", "80", "--trials", "3000", "--seed", "5"];
    assert!(run_fig("mc", a.path(), &[&args[..], &["--workers", "1"]].concat()).status.success());
    assert!(run_fig("mc", b.path(), &[&args[..], &["--workers", "3"]].concat()).status.success());
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("mc.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
