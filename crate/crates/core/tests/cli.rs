use std::fs;
use std::path::Path;
use std::process::Command;

use glspec::experiments::RunManifest;

fn glspec(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_glspec"))
        .args(args)
        .env("GLSPEC_THREADS", "2")
        .output()
        .expect("spawn glspec");
    assert!(
        out.status.success(),
        "glspec {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn gen_then_spectra_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    glspec(&["gen", "--kind", "spiked", "--n", "50", "--c", "0.5", "--lambda", "3,1", "--seed", "4", "--out", &s(&cloud)]);
    let c = glspec::data_gen::read_cloud_csv(&cloud).unwrap();
    assert_eq!((c.n, c.p, c.d), (50, 100, 2));

    let eig = dir.path().join("eig.csv");
    let mat = dir.path().join("w.csv");
    let hist = dir.path().join("hist.csv");
    let mp = dir.path().join("mp.csv");
    glspec(&[
        "spectra", "--cloud", &s(&cloud), "--matrix", "a", "--omega", "0.5", "--out", &s(&eig),
        "--matrix-out", &s(&mat), "--histogram-out", &s(&hist), "--bins", "7",
        "--mp-table-out", &s(&mp), "--mp-points", "33",
    ]);

    let lines = data_lines(&eig);
    assert_eq!(lines[0], "index,eigenvalue");
    assert_eq!(lines.len(), 51);
    let top: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((top - 1.0).abs() < 1e-9, "top eigenvalue of a transition matrix is 1, got {top}");

    let (m, header) = glspec::matrix::read_matrix_csv(&mat).unwrap();
    assert_eq!(m.nrows(), 50);
    assert_eq!(header.kind, "A");
    for i in 0..50 {
        let row: f64 = (0..50).map(|j| m[(i, j)]).sum();
        assert!((row - 1.0).abs() < 1e-10);
    }

    let h = data_lines(&hist);
    assert_eq!(h[0], "bin_left,bin_right,count");
    assert_eq!(h.len(), 8);
    let total: usize = h[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 50);

    let t = data_lines(&mp);
    assert_eq!(t[0], "x,density,cdf");
    assert_eq!(t.len(), 34);
}

#[test]
fn binary_cloud_matches_csv_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m1.csv");
    let bin = dir.path().join("m1.bin");
    for out in [&csv, &bin] {
        glspec(&["gen", "--kind", "curve-m1", "--n", "40", "--p", "20", "--seed", "9", "--out", out.to_str().unwrap()]);
    }
    let a = glspec::data_gen::read_cloud_csv(&csv).unwrap();
    let b = glspec::data_gen::read_cloud_binary(&bin).unwrap();
    assert_eq!(a.noisy(), b.noisy());
    assert_eq!(a.kind, b.kind);
}

#[test]
fn omega_prints_selection_json() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.bin");
    let json = dir.path().join("sel.json");
    glspec(&["gen", "--kind", "circle", "--n", "60", "--p", "60", "--lambda", "0.5", "--seed", "2", "--out", cloud.to_str().unwrap()]);
    let out = glspec(&[
        "omega", "--cloud", cloud.to_str().unwrap(), "--s", "0.05", "--t", "9", "--out", json.to_str().unwrap(),
    ]);
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let written: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(printed["k_profile"].as_array().unwrap().len(), 10);
    assert_eq!(printed["s"], 0.05);
}

#[test]
fn run_and_rerun_from_manifest_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "# small run\nn = 40\nc_grid = 0.5, 1\nseeds = 5\n").unwrap();
    let first = dir.path().join("first");
    glspec(&[
        "run", "--experiment", "accuracy_low_snr", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap(), "--fast",
    ]);
    let manifest = RunManifest::read(&first.join("manifest.json")).unwrap();
    assert_eq!(manifest.experiment, "accuracy_low_snr");
    assert!(manifest.outputs.iter().any(|o| o.path == "low_snr_summary.csv"));
    assert!(glspec::experiments::verify(&manifest, &first).unwrap().is_empty());

    let second = dir.path().join("second");
    glspec(&["run", "--manifest", first.join("manifest.json").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    let again = RunManifest::read(&second.join("manifest.json")).unwrap();
    assert_eq!(manifest.outputs, again.outputs);
}

#[test]
fn bad_arguments_fail_with_a_message() {
    let out = Command::new(env!("CARGO_BIN_EXE_glspec"))
        .args(["run", "--experiment", "no_such_thing", "--out", "/nonexistent/x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("glspec: "));
}
