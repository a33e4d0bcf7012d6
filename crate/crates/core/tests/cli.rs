use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array4;
use num_complex::Complex64;

use swirl::container::{Container, Domain};
use swirl::rng::{random_coefficients, seeded};
use swirl::verify::WATER_XYZ;
use swirl::{SpinSignal, TransformConfig, WignerTables};

fn swirl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swirl")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn verify_passes_and_prints_csv() {
    let out = swirl(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# swirl-csv v1\nname,L,metric,threshold,pass\n"));
    let rows = data_rows(&text);
    assert!(rows.len() >= 20);
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn verify_filter_selects_rows() {
    let out = swirl(&["verify", "--filter", "wigner"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0].starts_with("wigner/")));
}

#[test]
fn injected_parity_fault_is_detected() {
    let out = swirl(&["verify", "--filter", "swsft", "--inject-fault", "parity"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(data_rows(&stdout(&out)).iter().any(|r| r[4] == "false"));
}

#[test]
fn bench_rejects_single_repetition() {
    let out = swirl(&["bench", "--repetitions", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("repetitions"));
}

#[test]
fn bench_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = swirl(&["bench", "--resolution", "8,16", "--repetitions", "3", "--output", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("n,L,backend,path,repetitions,median_s,iqr_s,cross_check,status"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[8] == "ok"));
}

#[test]
fn transform_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let tables = WignerTables::new(6).unwrap();
    let c = random_coefficients(&mut seeded(1), 2, &[0, 1, -2], 6);
    let signal = swirl::swsft::inverse(&c, &tables, TransformConfig::default()).unwrap();
    let spatial = dir.path().join("signal.swc");
    let spectral = dir.path().join("coeffs.swc");
    let back = dir.path().join("back.swc");
    Container::from_signal(&signal).write_file(&spatial).unwrap();

    let out = swirl(&["transform", path_str(&spatial), "--output", path_str(&spectral), "--backend", "fft", "--path", "reduced"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let coeffs = Container::read_file(&spectral).unwrap();
    assert_eq!(coeffs.header.domain, Domain::Spectral);
    let got = coeffs.to_coefficients().unwrap();
    assert!(got.max_abs_diff(&c) < 1e-10 * c.max_abs());

    let out = swirl(&["transform", path_str(&spectral), "--direction", "inverse", "--output", path_str(&back)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let restored = Container::read_file(&back).unwrap().to_signal().unwrap();
    let err = (restored.samples() - signal.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(err < 1e-10);

    // a spectral file is not a valid forward input
    let out = swirl(&["transform", path_str(&spectral), "--output", path_str(&back)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("convention"), "{}", stderr(&out));
}

#[test]
fn transform_handles_empty_batch() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.swc");
    let output = dir.path().join("empty_out.swc");
    let signal = SpinSignal::new(Array4::<Complex64>::zeros((0, 1, 8, 8)), vec![0]).unwrap();
    Container::from_signal(&signal).write_file(&input).unwrap();
    let out = swirl(&["transform", path_str(&input), "--output", path_str(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = Container::read_file(&output).unwrap().to_coefficients().unwrap();
    assert_eq!((c.batch(), c.channels(), c.band_limit()), (0, 1, 4));
}

#[test]
fn featurize_water() {
    let dir = tempfile::tempdir().unwrap();
    let xyz = dir.path().join("water.xyz");
    std::fs::write(&xyz, WATER_XYZ).unwrap();
    let output = dir.path().join("water.swc");
    let out = swirl(&["featurize", path_str(&xyz), "--output", path_str(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = Container::read_file(&output).unwrap();
    assert_eq!(c.header.domain, Domain::Features);
    assert_eq!(c.header.shape[..2], [3, 4]);
    assert_eq!(c.header.grid_n, Some(32));

    let out = swirl(&["featurize", path_str(&xyz), "--powers", "2", "--resolution", "16", "--output", path_str(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = Container::read_file(&output).unwrap();
    assert_eq!(c.header.shape, vec![3, 2, 16, 16]);
}

#[test]
fn featurize_reports_bad_input_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let xyz = dir.path().join("bad.xyz");
    std::fs::write(&xyz, "2\nbad\nH 0 0 0\nXx 1 0 0\n").unwrap();
    let out = swirl(&["featurize", path_str(&xyz), "--output", path_str(&dir.path().join("o.swc"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.xyz:4"), "{}", stderr(&out));
}

#[test]
fn missing_input_fails() {
    let out = swirl(&["transform", "/nonexistent/input.swc", "--output", "/tmp/never.swc"]);
    assert_eq!(out.status.code(), Some(2));
    let out = swirl(&["featurize", "/nonexistent/input.xyz", "--output", "/tmp/never.swc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_honoured_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# verify only the Wigner checks\nfilter = wigner/sum\nseed = 3\nthreads = 1\n").unwrap();
    let out = swirl(&["verify", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "wigner/sum_formula");

    let out = swirl(&["verify", "--config", path_str(&cfg), "--filter", "grid/quadrature"]);
    assert_eq!(data_rows(&stdout(&out))[0][0], "grid/quadrature_area");

    std::fs::write(&cfg, "resolutoin = 8\n").unwrap();
    let out = swirl(&["verify", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(swirl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(swirl(&["bench", "--resolution", "7", "--repetitions", "3"]).status.code(), Some(2));
    assert_eq!(swirl(&["--help"]).status.code(), Some(0));
}
