//! Closed-form figure sweeps: MMSE versus pilot ratio (fig1) and versus RIS
//! size with optimized phases (fig2).

use ris_pdpr::analysis::{ergodic_mmse, pilot_ratio_limits, to_db, PowerSplit};
use ris_pdpr::geometry::{isotropic_correlation, planar_array_positions, steering_vector, ArrayGeometry, CorrelationMatrix};
use ris_pdpr::risopt::{coupling_matrix, default_epsilon, dsm_optimize_restarts, PhaseOptimizationResult};
use ris_pdpr::{Execution, Result};
use serde::Serialize;

use crate::config::{RisCorrelation, Settings};

/// One CSV row of the pilot-ratio sweep. Grid rows are followed by one
/// `is_baseline` row at `γ_p = 1` per `(τ_c, N_r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Row {
    pub tau_c: u32,
    pub n_r: usize,
    pub gamma_p: f64,
    pub lambda: f64,
    pub mmse_linear: f64,
    pub mmse_db: f64,
    pub gamma_p_star: f64,
    pub low_snr_marker: f64,
    pub high_snr_marker: f64,
    pub is_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub tau_c: u32,
    pub n_r: usize,
    pub gamma_p: f64,
    pub lambda: f64,
    pub mmse_linear: f64,
    pub mmse_db: f64,
}

#[derive(Debug, Clone)]
pub struct Fig1Output {
    pub rows: Vec<Fig1Row>,
    /// MMSE at `γ_p*` for each `(τ_c, N_r)`, in row order.
    pub stars: Vec<OperatingPoint>,
}

impl Fig1Output {
    /// Grid rows of one curve, baseline excluded.
    pub fn curve(&self, tau_c: u32, n_r: usize) -> Vec<&Fig1Row> {
        self.rows.iter().filter(|r| r.tau_c == tau_c && r.n_r == n_r && !r.is_baseline).collect()
    }

    pub fn baseline(&self, tau_c: u32, n_r: usize) -> Option<&Fig1Row> {
        self.rows.iter().find(|r| r.tau_c == tau_c && r.n_r == n_r && r.is_baseline)
    }
}

fn point(settings: &Settings, a: f64, tau_c: u32, n_r: usize, gamma_p: f64) -> Result<OperatingPoint> {
    let lambda = settings.lambda_form.lambda(a, &PowerSplit::new(tau_c, gamma_p, 1.0)?)?;
    let mmse_linear = ergodic_mmse(lambda)?;
    Ok(OperatingPoint { tau_c, n_r, gamma_p, lambda, mmse_linear, mmse_db: to_db(mmse_linear) })
}

/// Aggregate gain `a = (ζ N_b SNR)·N_r` with `ζ N_b SNR` fixed by the config.
pub fn run_fig1(settings: &Settings) -> Result<Fig1Output> {
    let gain = ris_pdpr::analysis::from_db(settings.zeta_nb_snr_db);
    let mut rows = Vec::new();
    let mut stars = Vec::new();
    for &tau_c in &settings.tau_c_list {
        let (low, high) = pilot_ratio_limits(tau_c)?;
        let grid = settings.gamma_p_grid.values(tau_c);
        for &n_r in &settings.nr_list {
            let a = gain * n_r as f64;
            let star = settings.lambda_form.optimal_pilot_ratio(a, tau_c)?;
            let row = |p: OperatingPoint, is_baseline| Fig1Row {
                tau_c,
                n_r,
                gamma_p: p.gamma_p,
                lambda: p.lambda,
                mmse_linear: p.mmse_linear,
                mmse_db: p.mmse_db,
                gamma_p_star: star,
                low_snr_marker: low,
                high_snr_marker: high,
                is_baseline,
            };
            for &g in &grid {
                rows.push(row(point(settings, a, tau_c, n_r, g)?, false));
            }
            rows.push(row(point(settings, a, tau_c, n_r, 1.0)?, true));
            stars.push(point(settings, a, tau_c, n_r, star)?);
        }
    }
    Ok(Fig1Output { rows, stars })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Equal,
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Row {
    pub tau_c: u32,
    pub n_r: usize,
    pub zeta: f64,
    pub gamma_p_policy: Policy,
    pub gamma_p: f64,
    pub lambda: f64,
    pub mmse_linear: f64,
    pub mmse_db: f64,
    pub dsm_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsmSummary {
    pub n_r: usize,
    pub zeta: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Fig2Output {
    pub rows: Vec<Fig2Row>,
    pub dsm: Vec<DsmSummary>,
}

impl Fig2Output {
    pub fn curve(&self, tau_c: u32, policy: Policy) -> Vec<&Fig2Row> {
        self.rows.iter().filter(|r| r.tau_c == tau_c && r.gamma_p_policy == policy).collect()
    }
}

pub(crate) fn ris_correlation(kind: RisCorrelation, geometry: &ArrayGeometry) -> CorrelationMatrix {
    match kind {
        RisCorrelation::Isotropic => isotropic_correlation(geometry),
        RisCorrelation::Identity => CorrelationMatrix::identity(geometry.len()),
    }
}

/// Runs the phase optimizer on an RIS geometry with the configured arrival
/// direction, correlation model and stopping rule.
pub(crate) fn optimize_phases(settings: &Settings, ris: &ArrayGeometry, exec: Execution) -> Result<PhaseOptimizationResult> {
    let v = steering_vector(ris, settings.ris_azimuth, settings.ris_elevation);
    let g = coupling_matrix(&v, &ris_correlation(settings.ris_correlation, ris))?;
    let epsilon = settings.epsilon.unwrap_or_else(|| default_epsilon(&g));
    dsm_optimize_restarts(&g, settings.restarts, settings.seed, epsilon, settings.max_sweeps, exec)
}

/// For every `N_r`: a `⌈√N_r⌉`-wide RIS, optimized phases, then the equal and
/// optimal pilot-ratio operating points with `a = ζ N_r N_b SNR`.
pub fn run_fig2(settings: &Settings, exec: Execution) -> Result<Fig2Output> {
    let n_b = planar_array_positions(settings.bs_rows, settings.bs_cols, settings.bs_spacing)?.len();
    let snr = ris_pdpr::analysis::from_db(settings.snr_db);
    let runs = exec.map_indexed(settings.nr_list.len(), |i| {
        let ris = ArrayGeometry::square(settings.nr_list[i], settings.ris_spacing)?;
        optimize_phases(settings, &ris, Execution::Sequential)
    });
    let mut dsm = Vec::with_capacity(runs.len());
    for (run, &n_r) in runs.into_iter().zip(&settings.nr_list) {
        let run = run?;
        dsm.push(DsmSummary { n_r, zeta: run.zeta, iterations: run.iterations, converged: run.converged });
    }
    let mut rows = Vec::new();
    for &tau_c in &settings.tau_c_list {
        for d in &dsm {
            let a = d.zeta * (d.n_r * n_b) as f64 * snr;
            let star = settings.lambda_form.optimal_pilot_ratio(a, tau_c)?;
            for (policy, gamma_p) in [(Policy::Equal, 1.0), (Policy::Optimal, star)] {
                let p = point(settings, a, tau_c, d.n_r, gamma_p)?;
                rows.push(Fig2Row {
                    tau_c,
                    n_r: d.n_r,
                    zeta: d.zeta,
                    gamma_p_policy: policy,
                    gamma_p,
                    lambda: p.lambda,
                    mmse_linear: p.mmse_linear,
                    mmse_db: p.mmse_db,
                    dsm_iterations: d.iterations,
                });
            }
        }
    }
    Ok(Fig2Output { rows, dsm })
}
