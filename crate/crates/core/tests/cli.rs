use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use memsyn::io::{Config, RunManifest};

fn memsyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memsyn"))
        .args(args)
        .env_remove("MEMSYN_OUT_DIR")
        .env_remove("MEMSYN_MNIST_DIR")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = memsyn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every CSV in `dir`, by file name.
fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let (ca, cb) = (csvs(a), csvs(b));
    assert!(!ca.is_empty());
    assert_eq!(ca.keys().collect::<Vec<_>>(), cb.keys().collect::<Vec<_>>());
    for (name, bytes) in &ca {
        assert!(bytes == &cb[name], "{name} differs between runs");
    }
}

fn dir_arg(d: &tempfile::TempDir) -> String {
    d.path().to_str().unwrap().to_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = memsyn(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(memsyn(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn emit_defaults_prints_the_default_config() {
    let out = memsyn(&["emit-defaults"]);
    assert!(out.status.success());
    let cfg = Config::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, Config::default());
}

#[test]
fn bad_config_key_is_reported() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("bad.toml");
    std::fs::write(&path, "[neuron]\ntau_mm = \"8ms\"\n").unwrap();
    let out = memsyn(&["--config", path.to_str().unwrap(), "emit-defaults"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau_mm"));
}

#[test]
fn missing_config_file_is_reported() {
    let out = memsyn(&["--config", "/nonexistent/memsyn.toml", "emit-defaults"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/memsyn.toml"));
}

#[test]
fn variability_is_byte_identical_across_runs_and_thread_counts() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(&["--out-dir", &dir_arg(&a), "variability", "--seed", "7"]);
    run_ok(&["--out-dir", &dir_arg(&b), "variability", "--seed", "7"]);
    run_ok(&["--out-dir", &dir_arg(&c), "--threads", "1", "variability", "--seed", "7"]);
    assert_same_outputs(a.path(), b.path());
    assert_same_outputs(a.path(), c.path());
}

#[test]
fn seed_changes_variability_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(&["--out-dir", &dir_arg(&a), "variability", "--no-sweep", "--seed", "7"]);
    run_ok(&["--out-dir", &dir_arg(&b), "variability", "--no-sweep", "--seed", "8"]);
    assert_ne!(csvs(a.path())["variability_samples.csv"], csvs(b.path())["variability_samples.csv"]);
}

#[test]
fn circuit_sweep_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(&["--out-dir", &dir_arg(&a), "circuit-sweep"]);
    run_ok(&["--out-dir", &dir_arg(&b), "--threads", "1", "circuit-sweep"]);
    assert_same_outputs(a.path(), b.path());
    let text = String::from_utf8(csvs(a.path())["normalizer_sweep.csv"].clone()).unwrap();
    assert!(text.starts_with("r_pos,r_neg,v_s,i_pos,i_neg\r\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 20);
}

#[test]
fn single_pattern_is_deterministic_serial_and_parallel() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["single-pattern", "--seeds", "3", "--n-train", "20", "--seed", "4"];
    let mut a_args = vec!["--out-dir", a.path().to_str().unwrap(), "--threads", "4"];
    a_args.extend(args);
    let mut b_args = vec!["--out-dir", b.path().to_str().unwrap(), "--threads", "1"];
    b_args.extend(args);
    run_ok(&a_args);
    run_ok(&b_args);
    assert_same_outputs(a.path(), b.path());
}

#[test]
fn manifest_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(&["--out-dir", &dir_arg(&a), "variability", "--n", "500", "--preset", "typical", "--seed", "3"]);
    let m = RunManifest::read(&a.path().join("manifest.json")).unwrap();
    assert_eq!(m.subcommand, "variability");
    assert_eq!(m.seeds, vec![3]);
    assert_eq!(m.config.variability.n, 500);
    for f in &m.outputs {
        assert!(a.path().join(f).exists(), "{f} listed but missing");
    }

    let cfg_path = b.path().join("replay.toml");
    std::fs::write(&cfg_path, m.config.to_toml()).unwrap();
    let out_b = b.path().join("out");
    run_ok(&["--config", cfg_path.to_str().unwrap(), "--out-dir", out_b.to_str().unwrap(), "variability"]);
    assert_same_outputs(a.path(), &out_b);
}

fn write_idx(dir: &Path, stem: &str, n: u32) {
    let mut img = Vec::new();
    for v in [0x0803u32, n, 28, 28] {
        img.extend(v.to_be_bytes());
    }
    let mut lab = Vec::new();
    for v in [0x0801u32, n] {
        lab.extend(v.to_be_bytes());
    }
    for k in 0..n {
        let label = (k % 7) as u8;
        // Each class lights a different horizontal band.
        for r in 0..28u32 {
            for _ in 0..28 {
                img.push(if r / 4 == label as u32 { 255 } else { 0 });
            }
        }
        lab.push(label);
    }
    std::fs::write(dir.join(format!("{stem}-images-idx3-ubyte")), img).unwrap();
    std::fs::write(dir.join(format!("{stem}-labels-idx1-ubyte")), lab).unwrap();
}

#[test]
fn mnist_runs_on_idx_files_and_is_deterministic() {
    let data = tempfile::tempdir().unwrap();
    write_idx(data.path(), "train", 70);
    write_idx(data.path(), "t10k", 35);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = [
        "mnist",
        "--mnist-dir",
        data.path().to_str().unwrap(),
        "--n-c",
        "1",
        "--n-train",
        "20",
        "--n-test",
        "10",
        "--seeds",
        "2",
    ];
    let mut a_args = vec!["--out-dir", a.path().to_str().unwrap()];
    a_args.extend(common);
    let mut b_args = vec!["--out-dir", b.path().to_str().unwrap(), "--threads", "1"];
    b_args.extend(common);
    run_ok(&a_args);
    run_ok(&b_args);
    assert_same_outputs(a.path(), b.path());

    let files = csvs(a.path());
    assert_eq!(files.len(), 2 + 2 * 5);
    let w = String::from_utf8(files["weights_seed1_class0.csv"].clone()).unwrap();
    assert_eq!(w.lines().count(), 25);
    assert_eq!(w.lines().nth(1).unwrap().split(',').count(), 24);
    let report = String::from_utf8(files["mnist_report.csv"].clone()).unwrap();
    assert_eq!(report.lines().count(), 1 + 2 * 10);

    let m = RunManifest::read(&a.path().join("manifest.json")).unwrap();
    assert_eq!(m.inputs.len(), 4);
    assert_eq!(m.seeds, vec![1, 2]);
}

#[test]
fn mnist_with_missing_files_fails_cleanly() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = memsyn(&["--out-dir", &dir_arg(&out_dir), "mnist", "--mnist-dir", "/nonexistent/mnist"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/mnist"));
}
