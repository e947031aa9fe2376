//! Experiment runner for the `ris-pdpr` toolkit: figure sweeps, RIS phase
//! optimization and the validation suite, driven by a JSON config.
//!
//! Sweeps are written as CSV (header row, `\n` line endings) with a
//! `<output>.meta.json` sidecar recording the resolved settings and which of
//! them are built-in defaults. Reports are JSON with `schema_version = "1"`.
//! Outputs contain no timestamps, so reruns are byte-identical.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod optimize;
pub mod sweep;
pub mod validate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ris_pdpr::Execution;
use serde::Serialize;

pub use config::{ConfigError, Experiment, ExperimentConfig, Settings};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] ris_pdpr::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }

    fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        RunError::Output { path: path.to_path_buf(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False only when a validation check failed.
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| RunError::output(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| RunError::output(path, e))?;
    }
    w.flush().map_err(|e| RunError::output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| RunError::output(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| RunError::output(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| RunError::output(path, e))
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    schema_version: &'static str,
    settings: &'a Settings,
}

pub fn meta_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

fn write_sweep<T: Serialize>(settings: &Settings, rows: &[T]) -> Result<Vec<PathBuf>, RunError> {
    let out = &settings.output_path;
    write_csv(out, rows)?;
    let meta = meta_path(out);
    write_json(&meta, &SweepMeta { schema_version: SCHEMA_VERSION, settings })?;
    Ok(vec![out.clone(), meta])
}

/// Runs the configured experiment and writes its output files. A failed
/// validation still writes its reports and returns `passed = false`.
pub fn execute(settings: &Settings, exec: Execution) -> Result<Outcome, RunError> {
    match settings.experiment {
        Experiment::Fig1 => {
            let out = sweep::run_fig1(settings)?;
            Ok(Outcome { passed: true, files: write_sweep(settings, &out.rows)? })
        }
        Experiment::Fig2 => {
            let out = sweep::run_fig2(settings, exec)?;
            Ok(Outcome { passed: true, files: write_sweep(settings, &out.rows)? })
        }
        Experiment::OptimizeRis => {
            let report = optimize::run_optimize_ris(settings, exec)?;
            write_json(&settings.output_path, &report)?;
            Ok(Outcome { passed: true, files: vec![settings.output_path.clone()] })
        }
        Experiment::Validate => {
            let report = validate::run_validate(settings, exec)?;
            let json = settings.output_path.with_extension("json");
            let csv = settings.output_path.with_extension("csv");
            write_json(&json, &report)?;
            write_csv(&csv, &report.points)?;
            Ok(Outcome { passed: report.all_pass, files: vec![json, csv] })
        }
    }
}
