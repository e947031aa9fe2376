use ris_pdpr::geometry::planar_array_positions;
use ris_pdpr::{Execution, Result};
use serde::Serialize;

use crate::config::Settings;
use crate::sweep::optimize_phases;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub schema_version: &'static str,
    pub experiment: &'static str,
    pub n_r: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Phase angles `θ_n` in radians with `ψ_n = e^{−jθ_n}`, wrapped to `(−π, π]`.
    pub phases: Vec<f64>,
    pub zeta: f64,
    pub initial_zeta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub defaults_used: Vec<&'static str>,
}

pub fn run_optimize_ris(settings: &Settings, exec: Execution) -> Result<OptimizeReport> {
    let ris = planar_array_positions(settings.ris_rows, settings.ris_cols, settings.ris_spacing)?;
    let run = optimize_phases(settings, &ris, exec)?;
    Ok(OptimizeReport {
        schema_version: crate::SCHEMA_VERSION,
        experiment: "optimize-ris",
        n_r: ris.len(),
        seed: settings.seed,
        restarts: settings.restarts,
        phases: run.phases.angles(),
        zeta: run.zeta,
        initial_zeta: run.initial_zeta,
        iterations: run.iterations,
        converged: run.converged,
        history: run.history,
        defaults_used: settings.defaults_used.clone(),
    })
}
