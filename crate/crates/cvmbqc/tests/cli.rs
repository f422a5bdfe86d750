use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cvmbqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvmbqc")).args(args).output().expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn compile_writes_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = cvmbqc(&["compile", "--alpha", "2.0", "--theta", "0.3927", "--nmax", "40", "--trials", "50", "--eps", "1e-6,1e-9", "--seed", "7", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_csv(&dir.path().join("compile_summary.csv"));
    assert_eq!(rows[0], ["alpha", "theta", "eps", "trials", "mean_steps", "p_floor", "ci_low", "ci_high"]);
    assert_eq!(rows.len(), 3);
    let mean: f64 = rows[1][4].parse().unwrap();
    assert!(mean > 1.0 && mean.is_finite());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["experiment"], "compile");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let bytes = fs::read(dir.path().join("compile_summary.csv")).unwrap();
    assert_eq!(manifest["outputs"][0]["sha256"], cvmbqc::manifest::sha256_hex(&bytes));
}

#[test]
fn truncation_certificate_row() {
    let dir = tempfile::tempdir().unwrap();
    let run = cvmbqc(&["truncation", "--alpha", "2", "--nmax", "35", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success());
    let rows = read_csv(&dir.path().join("truncation.csv"));
    let bound: f64 = rows[1][4].parse().unwrap();
    let measured: f64 = rows[1][5].parse().unwrap();
    assert!((bound - 1.0).abs() < 1e-15);
    assert!(measured < 1e-9);
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn output_is_identical_across_runs_and_thread_counts() {
    for sub in ["compile", "couple", "weak-compile", "readout"] {
        let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        for (dir, threads) in dirs.iter().zip(["1", "1", "3"]) {
            let run = cvmbqc(&[sub, "--trials", "40", "--seed", "5", "--threads", threads, "--format", "jsonl", "--out", dir.path().to_str().unwrap()]);
            assert!(run.status.success(), "{sub}: {}", String::from_utf8_lossy(&run.stderr));
        }
        let first = data_files(dirs[0].path());
        assert!(!first.is_empty());
        for d in &dirs[1..] {
            assert_eq!(data_files(d.path()), first, "{sub}");
        }
    }
}

#[test]
fn config_file_runs_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "experiment = \"couple\"\ntrials = 10\nseed = 1\n").unwrap();
    let out = dir.path().join("out");
    let run = cvmbqc(&["run", "--config", cfg.to_str().unwrap(), "--trials", "12", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read_csv(&out.join("couple_trials.csv")).len(), 13);
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "experiment = \"compile\"\nalpah = 2.0\n").unwrap();
    let run = cvmbqc(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("alpah"));
    let run = cvmbqc(&["compile", "--trials", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let run = cvmbqc(&["run", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn numerical_contract_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    // Poisson mass beyond a cutoff of 2 at γ² ≈ 0.59 is far above the abort limit.
    let run = cvmbqc(&["couple", "--nmax", "2", "--trials", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}
