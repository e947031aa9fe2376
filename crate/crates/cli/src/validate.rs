//! Simulation-versus-closed-form validation suite.

use ris_pdpr::analysis::LambdaForm;
use ris_pdpr::channel::{CascadeStatistics, PhaseShifts};
use ris_pdpr::estimation::zadoff_chu;
use ris_pdpr::geometry::{planar_array_positions, steering_vector};
use ris_pdpr::montecarlo::{
    mse_identity_suite, point_seed, rank1_suite, sample_rho, validate_closed_form, ExponentialityReport, Scenario,
    SuiteReport, Z_LIMIT,
};
use ris_pdpr::{Execution, Result};
use serde::Serialize;

use crate::config::Settings;
use crate::sweep::ris_correlation;

pub const GRID_GAINS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const MOMENT_Z_LIMIT: f64 = 5.0;
pub const IDENTITY_CASES: u64 = 1000;
pub const RANK1_CASES: u64 = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub index: usize,
    pub aggregate_gain: f64,
    pub tau_c: u32,
    pub gamma_p: f64,
    pub lambda: f64,
    pub trials: u64,
    pub empirical_mean: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialityCheck {
    #[serde(flatten)]
    pub report: ExponentialityReport,
    pub z_limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub schema_version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub trials_per_point: u64,
    pub z_limit: f64,
    pub points: Vec<GridPoint>,
    pub exponentiality: ExponentialityCheck,
    pub mse_identity: SuiteReport,
    pub rank1_closed_forms: SuiteReport,
    pub all_pass: bool,
    pub defaults_used: Vec<&'static str>,
}

/// Rank-1 link built from the configured arrays with all-ones RIS phases.
pub fn base_cascade(settings: &Settings) -> Result<CascadeStatistics> {
    let bs = planar_array_positions(settings.bs_rows, settings.bs_cols, settings.bs_spacing)?;
    let ris = planar_array_positions(settings.ris_rows, settings.ris_cols, settings.ris_spacing)?;
    CascadeStatistics::new(
        steering_vector(&bs, settings.bs_azimuth, settings.bs_elevation),
        steering_vector(&ris, settings.ris_azimuth, settings.ris_elevation),
        PhaseShifts::ones(ris.len()),
        ris_correlation(settings.ris_correlation, &ris),
    )
}

/// Default 12-point grid: `a ∈ {0.1, 1, 10, 100}` by `γ_p ∈ {1, γ_p*(a), τ_c/4}`
/// at the first configured coherence interval.
pub fn default_grid(settings: &Settings) -> Result<Vec<(f64, u32, f64)>> {
    let tau_c = settings.tau_c_list[0];
    let mut grid = Vec::new();
    for a in GRID_GAINS {
        let star = LambdaForm::PerSymbol.optimal_pilot_ratio(a, tau_c)?;
        for gamma_p in [1.0, star, tau_c as f64 / 4.0] {
            grid.push((a, tau_c, gamma_p));
        }
    }
    Ok(grid)
}

pub fn run_validate(settings: &Settings, exec: Execution) -> Result<ValidationReport> {
    let cascade = base_cascade(settings)?;
    let pilot = zadoff_chu(1, 1)?;
    let grid = default_grid(settings)?;
    let scenarios = grid
        .iter()
        .map(|&(a, tau_c, g)| Scenario::with_aggregate_gain(cascade.clone(), pilot.clone(), a, tau_c, g))
        .collect::<Result<Vec<_>>>()?;
    let reports = validate_closed_form(&scenarios, settings.trials, settings.seed, exec)?;
    let mut points = Vec::with_capacity(grid.len());
    for (index, ((&(a, tau_c, gamma_p), s), r)) in grid.iter().zip(&scenarios).zip(reports).enumerate() {
        points.push(GridPoint {
            index,
            aggregate_gain: a,
            tau_c,
            gamma_p,
            lambda: s.lambda()?,
            trials: r.trials,
            empirical_mean: r.empirical_mean,
            standard_error: r.standard_error,
            closed_form: r.closed_form,
            z_score: r.z_score,
            passed: r.passes(),
        });
    }
    let n = grid.len();
    // the equal-power point at a = 1
    let (_, rho_report) = sample_rho(&scenarios[3], settings.trials, point_seed(settings.seed, n), exec, false)?;
    let exponentiality = ExponentialityCheck {
        passed: rho_report.moments_pass(MOMENT_Z_LIMIT),
        report: rho_report,
        z_limit: MOMENT_Z_LIMIT,
    };
    let mse_identity = mse_identity_suite(IDENTITY_CASES, point_seed(settings.seed, n + 1), exec)?;
    let rank1_closed_forms = rank1_suite(RANK1_CASES, point_seed(settings.seed, n + 2), exec)?;
    let all_pass = points.iter().all(|p| p.passed) && exponentiality.passed && mse_identity.passed && rank1_closed_forms.passed;
    Ok(ValidationReport {
        schema_version: crate::SCHEMA_VERSION,
        experiment: "validate",
        seed: settings.seed,
        trials_per_point: settings.trials,
        z_limit: Z_LIMIT,
        points,
        exponentiality,
        mse_identity,
        rank1_closed_forms,
        all_pass,
        defaults_used: settings.defaults_used.clone(),
    })
}
