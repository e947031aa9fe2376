use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ris_pdpr_cli::sweep::run_fig2;
use ris_pdpr_cli::{ExperimentConfig, SCHEMA_VERSION};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ris-pdpr");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

fn read_csv(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    (header, r.records().map(|x| x.unwrap()).collect())
}

#[test]
fn fig1_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = run(&["--config", fixture("fig1_tiny.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (gh, golden) = read_csv(&fixture("fig1_tiny.csv"));
    let (h, rows) = read_csv(&out);
    assert_eq!(h, gh);
    assert_eq!(rows.len(), golden.len());
    for (row, want) in rows.iter().zip(&golden) {
        for (col, (a, b)) in h.iter().zip(row.iter().zip(want)) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{col}: {x} vs {y}"),
                _ => assert_eq!(a, b, "{col}"),
            }
        }
    }
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("fig1.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], SCHEMA_VERSION);
    assert!(meta["settings"]["defaultsUsed"].as_array().unwrap().iter().any(|v| v == "seed"));
}

#[test]
fn fig1_default_markers_and_star_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    assert!(run(&["--experiment", "fig1", "--out", out.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&out);
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for r in &rows {
        assert_eq!(&r[col("low_snr_marker")], "80.0");
        let high: f64 = r[col("high_snr_marker")].parse().unwrap();
        assert!((high - 11.7565).abs() < 1e-4);
        let linear: f64 = r[col("mmse_linear")].parse().unwrap();
        let db: f64 = r[col("mmse_db")].parse().unwrap();
        assert!((db - 10.0 * linear.log10()).abs() <= 1e-12);
    }
    let s = ExperimentConfig::from_json(r#"{"experiment": "fig1"}"#).unwrap().resolve(None).unwrap();
    let mem = ris_pdpr_cli::sweep::run_fig1(&s).unwrap();
    for (star, n_r) in mem.stars.iter().zip(&s.nr_list) {
        assert!(star.mmse_linear <= mem.baseline(160, *n_r).unwrap().mmse_linear);
    }
}

#[test]
fn sweeps_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"experiment": "fig2", "nrList": [1, 4, 16, 64], "tauCList": [40]}"#);
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.csv"));
        assert!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn fig2_lambda_grows_faster_at_small_ris() {
    let s = ExperimentConfig::from_json(r#"{"experiment": "fig2", "tauCList": [160]}"#).unwrap().resolve(None).unwrap();
    let out = run_fig2(&s, ris_pdpr::Execution::Parallel).unwrap();
    let curve = out.curve(160, ris_pdpr_cli::sweep::Policy::Equal);
    let slope = |i: usize, j: usize| {
        (curve[j].lambda / curve[i].lambda).ln() / (curve[j].n_r as f64 / curve[i].n_r as f64).ln()
    };
    let n = curve.len();
    let (small, large) = (slope(0, 2), slope(n - 3, n - 1));
    assert!(small > 1.5 * large, "small {small} large {large}");
    for d in &out.dsm {
        assert!(d.converged, "N_r = {}", d.n_r);
    }
}

#[test]
fn optimize_ris_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let cfg = write_config(
        dir.path(),
        "id.json",
        r#"{"experiment": "optimize-ris", "risRows": 3, "risCols": 5, "risCorrelation": "identity"}"#,
    );
    assert!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert!((v["zeta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["iterations"], 1);
    assert_eq!(v["phases"].as_array().unwrap().len(), 15);

    let cfg = write_config(dir.path(), "one.json", r#"{"experiment": "optimize-ris", "risRows": 1, "risCols": 1}"#);
    assert!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let first = std::fs::read(&out).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["phases"], serde_json::json!([0.0]));
    assert!((v["zeta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(run(&["--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn optimize_ris_reports_nonconvergence_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "optimize-ris", "risRows": 8, "risCols": 8, "maxSweeps": 1, "epsilon": 1e-300}"#,
    );
    let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn small_validation_run_reports_finite_z() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = run(&["--experiment", "validate", "--trials", "10", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    for p in v["points"].as_array().unwrap() {
        assert!(p["z_score"].as_f64().unwrap().is_finite());
        assert!(p["standard_error"].as_f64().unwrap() > 0.0);
    }
    assert!(dir.path().join("v.csv").exists());
    assert_eq!(v["all_pass"].as_bool().unwrap(), o.status.code() == Some(0));
}

#[test]
fn config_errors_exit_two_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let cases = [
        r#"{"experiment": "validate", "tauC": 40, "gammaPGrid": {"min": 1, "max": 40, "points": 3}}"#,
        r#"{"experiment": "fig1", "nrList": [0]}"#,
        r#"{"experiment": "fig2", "unknownKey": 1}"#,
        r#"{"experiment": "fig9"}"#,
        "{ not json",
    ];
    for (i, json) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), json);
        let o = run(&["--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{json}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
    assert_eq!(run(&["--config", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn default_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("validate.json");
    let o = run(&["--experiment", "validate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["points"].as_array().unwrap().len(), 12);
    assert_eq!(v["mse_identity"]["cases"], 1000);
}
