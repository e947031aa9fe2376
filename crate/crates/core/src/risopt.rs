//! Statistical RIS phase design: maximize `ζ = ψᴴ G ψ` subject to `|ψ_n| = 1`
//! by dimension-wise sinusoidal maximization (cyclic coordinate ascent).

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::PhaseShifts;
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::geometry::{CorrelationMatrix, SteeringVector};
use crate::linalg::{CMatrix, CVector};
use crate::montecarlo::trial_rng;

/// Hermitian coupling matrix `G` with `ψᴴ G ψ = vᴴ Ψ C_r Ψ* v`.
#[derive(Debug, Clone)]
pub struct CouplingMatrix(CMatrix);

/// `g_nm = v_n c_nm v_m*`.
///
/// For a real steering vector (e.g. broadside) this is `diag(vᴴ) C_r diag(v)`;
/// in general it is its conjugate, which is the orientation that makes the
/// quadratic form equal the effective gain for the same `ψ` that enters `Ψ`.
pub fn coupling_matrix(v: &SteeringVector, correlation: &CorrelationMatrix) -> Result<CouplingMatrix> {
    let n = v.len();
    if correlation.len() != n {
        return invalid(format!("steering vector has {n} entries, correlation is {}x{0}", correlation.len()));
    }
    let v = v.as_vector();
    let c = correlation.entries();
    Ok(CouplingMatrix(CMatrix::from_fn(n, n, |i, j| v[i] * c[(i, j)] * v[j].conj())))
}

impl CouplingMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return invalid("coupling matrix must be square and nonempty");
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        if (&m - m.adjoint()).norm() > 1e-12 * scale {
            return invalid("coupling matrix must be Hermitian");
        }
        Ok(Self(m))
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Re(ψᴴ G ψ)`.
    pub fn objective(&self, phases: &CVector) -> f64 {
        phases.dotc(&(&self.0 * phases)).re
    }
}

/// Re-aligns `ψ_n` with `Σ_{m≠n} g_nm ψ_m`, leaving it unchanged when that
/// sum vanishes. Returns the new entry.
pub fn dsm_step(phases: &mut CVector, g: &CouplingMatrix, n: usize) -> Complex64 {
    let row = g.0.row(n);
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, psi) in phases.iter().enumerate() {
        if m != n {
            sum += row[m] * psi;
        }
    }
    let norm = sum.norm();
    if norm >= 1e-300 {
        phases[n] = sum / norm;
    }
    phases[n]
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseOptimizationResult {
    #[serde(skip)]
    pub phases: PhaseShifts,
    pub zeta: f64,
    pub initial_zeta: f64,
    /// `ζ` after each full sweep.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Default stopping tolerance, relative to `trace(G)`.
pub fn default_epsilon(g: &CouplingMatrix) -> f64 {
    1e-10 * g.trace().abs().max(f64::MIN_POSITIVE)
}

pub const DEFAULT_MAX_SWEEPS: usize = 1000;

/// Sweeps `n = 1..N_r` until two consecutive sweep objectives differ by at
/// most `epsilon`. At least one sweep always runs. Hitting `max_sweeps`
/// returns with `converged = false`.
pub fn dsm_optimize(
    g: &CouplingMatrix,
    initial: &PhaseShifts,
    epsilon: f64,
    max_sweeps: usize,
) -> Result<PhaseOptimizationResult> {
    if initial.len() != g.len() {
        return invalid(format!("initial phases have {} entries, G is {}x{1}", initial.len(), g.len()));
    }
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if max_sweeps == 0 {
        return invalid("max_sweeps must be at least 1");
    }
    let mut psi = initial.as_vector().clone();
    let initial_zeta = g.objective(&psi);
    let mut previous = initial_zeta;
    let mut history = Vec::new();
    let mut converged = false;
    while history.len() < max_sweeps {
        for n in 0..g.len() {
            dsm_step(&mut psi, g, n);
        }
        let zeta = g.objective(&psi);
        history.push(zeta);
        if (zeta - previous).abs() <= epsilon {
            converged = true;
            break;
        }
        previous = zeta;
    }
    let zeta = *history.last().expect("at least one sweep");
    Ok(PhaseOptimizationResult {
        phases: PhaseShifts::from_unnormalized(psi),
        zeta,
        initial_zeta,
        iterations: history.len(),
        history,
        converged,
    })
}

/// Runs restart 0 from all-ones phases and restarts `1..restarts` from
/// uniformly random phases drawn from per-restart streams of `seed`; returns
/// the best run (lowest index on ties).
pub fn dsm_optimize_restarts(
    g: &CouplingMatrix,
    restarts: usize,
    seed: u64,
    epsilon: f64,
    max_sweeps: usize,
    exec: Execution,
) -> Result<PhaseOptimizationResult> {
    let n = g.len();
    let runs = exec.map_indexed(restarts.max(1), |i| {
        let init = if i == 0 {
            PhaseShifts::ones(n)
        } else {
            let mut rng = trial_rng(seed, i as u64);
            let angles: Vec<f64> = (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
            PhaseShifts::from_angles(&angles).expect("finite angles")
        };
        dsm_optimize(g, &init, epsilon, max_sweeps)
    });
    let mut best: Option<PhaseOptimizationResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.zeta > b.zeta) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}
