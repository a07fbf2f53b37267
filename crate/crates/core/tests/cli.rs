use std::path::Path;
use std::process::{Command, Output};

use heavyband::domain::SpectralParameter;
use heavyband::harness::{read_records, report_from_records, ExperimentConfig, ExperimentReport};
use heavyband::models::laplacian_1d;
use heavyband::noise::{build_noise_seeded, NoiseFamily, NoiseSpec};
use heavyband::resolvent::{stieltjes_trace, GreenReport};

fn heavyband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavyband"))
        .args(args)
        .env("HEAVYBAND_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, body: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

#[test]
fn selftest_exits_zero() {
    let out = heavyband(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}

#[test]
fn experiment_list_names_every_experiment() {
    let out = heavyband(&["experiment", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["local_law", "trace_law", "entrywise_failure", "boundedness", "spectral_statistics", "concentration"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(heavyband(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(heavyband(&["green", "--N"]).status.code(), Some(1));
    assert_eq!(heavyband(&["green", "--N", "10", "--bogus"]).status.code(), Some(1));
    assert_eq!(heavyband(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_one() {
    // eta must be positive
    let out = heavyband(&["green", "--N", "10", "--E", "0.1", "--eta", "-0.5"]);
    assert_eq!(out.status.code(), Some(1));
    // alpha outside (0, 2)
    let out = heavyband(&["green", "--N", "10", "--family", "pareto", "--alpha", "2.5", "--E", "0", "--eta", "0.1"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"experiment": "trace_law", "noise": {"family": "pareto", "alpha": 1.0}, "trials": 0}),
    );
    let out = heavyband(&["experiment", "run", "trace_law", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let cfg = write_config(
        dir.path(),
        serde_json::json!({"experiment": "trace_law", "noise": {"family": "pareto", "alpha": 1.0}, "colour": 3}),
    );
    let out = heavyband(&["experiment", "run", "trace_law", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = heavyband(&["experiment", "run", "local_law", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn green_trace_matches_library() {
    let out = heavyband(&[
        "green", "--N", "200", "--family", "pareto", "--alpha", "1.2", "--K", "1", "--seed", "4", "--E", "0.3", "-0.7",
        "--eta", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<GreenReport> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reports.len(), 2);
    let spec = NoiseSpec::new(NoiseFamily::Pareto, 1.2, 1).with_seed(4);
    let h = laplacian_1d(200).add(&build_noise_seeded(200, &spec).unwrap()).unwrap();
    for r in &reports {
        let want = stieltjes_trace(&h, r.z).unwrap();
        assert!((r.trace - want).norm() <= 1e-12 * want.norm(), "{} vs {want}", r.trace);
        assert_eq!(r.entries.len(), 200);
    }
    assert_eq!(reports[1].z, SpectralParameter::new(-0.7, 0.05).unwrap());
}

#[test]
fn green_laplacian_has_references() {
    let out = heavyband(&["green", "--N", "64", "--E", "0.5", "--eta", "0.1", "--entries", "band"]);
    assert_eq!(out.status.code(), Some(0));
    let reports: Vec<GreenReport> = serde_json::from_str(&stdout(&out)).unwrap();
    let dev = reports[0].max_deviation().unwrap();
    assert!(dev <= 1e-10, "{dev}");
    assert!(reports[0].trace_deviation.unwrap() <= 1e-10);
}

#[test]
fn spectrum_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("spec");
    let out = heavyband(&[
        "spectrum", "--N", "300", "--family", "truncated", "--q", "2", "--K", "1", "--seed", "2", "--eigenvectors",
        "--output-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("eigenvalues.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .filter_map(|l| l.split(',').next_back().and_then(|v| v.trim().parse().ok()))
        .collect();
    assert_eq!(values.len(), 300);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(json["N"], 300);
    assert!(json["wegner"].as_array().unwrap().iter().all(|w| w["holds"] == true));
    let bytes = std::fs::metadata(out_dir.join("eigenvectors.bin")).unwrap().len();
    assert!(bytes >= 300 * 300 * 8);
}

fn trace_law_config(dir: &Path) -> std::path::PathBuf {
    write_config(
        dir,
        serde_json::json!({
            "experiment": "trace_law",
            "noise": {"family": "pareto", "alpha": 1.0, "K": 0},
            "N_list": [200, 400],
            "mesh": {"nE": 3, "nEta": 3},
            "trials": 6,
            "calibration": {"pilot_trials": 4},
            "master_seed": 11
        }),
    )
}

#[test]
fn experiment_run_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = trace_law_config(dir.path());
    let out_dir = dir.path().join("run");
    let mut snapshots = Vec::new();
    for workers in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_heavyband"))
            .args(["experiment", "run", "trace_law", "--config", cfg.to_str().unwrap(), "--output-dir"])
            .arg(&out_dir)
            .env("HEAVYBAND_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("trials.jsonl"));
        let files: Vec<Vec<u8>> = ["trials.jsonl", "report.json", "summary.csv"]
            .iter()
            .map(|name| std::fs::read(out_dir.join(name)).unwrap())
            .collect();
        snapshots.push(files);
    }
    assert!(snapshots[0] == snapshots[1], "outputs differ between runs");
}

#[test]
fn report_is_recomputable_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = trace_law_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = heavyband(&[
        "experiment", "run", "trace_law", "--config", cfg_path.to_str().unwrap(), "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = read_records(&out_dir.join("trials.jsonl")).unwrap();
    assert_eq!(records.len(), 2 * (6 + 4));
    let mut cfg = ExperimentConfig::load(&cfg_path).unwrap();
    cfg.output_dir = out_dir.clone();
    let rebuilt = report_from_records(&cfg, &records).unwrap();
    let written: ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(rebuilt, written);
    let csv = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("experiment,model,family,alpha,sigma,K,N,statistic,q05,q50,q95,pass_fraction"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
